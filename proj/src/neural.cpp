#include "uavwpcn/neural.hpp"

namespace uavwpcn {

using nlohmann::json;

json checkpoint_to_json(const std::vector<NamedArray>& arrays) {
  json doc;
  doc["format"] = "uavwpcn-checkpoint";
  doc["version"] = kCheckpointVersion;
  json list = json::array();
  for (const auto& a : arrays) list.push_back({{"name", a.name}, {"shape", a.shape}, {"data", a.data}});
  doc["arrays"] = std::move(list);
  return doc;
}

std::vector<NamedArray> checkpoint_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "uavwpcn-checkpoint") {
    throw std::invalid_argument("not a uavwpcn checkpoint document");
  }
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  std::vector<NamedArray> out;
  for (const auto& entry : doc.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<Index>>();
    a.data = entry.at("data").get<std::vector<double>>();
    Index expected = 1;
    for (Index d : a.shape) expected *= d;
    if (expected != static_cast<Index>(a.data.size())) {
      throw std::invalid_argument("array '" + a.name + "' has data inconsistent with its shape");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<NamedArray> mlp_arrays(const Mlp<double>& net, const std::string& prefix) {
  std::vector<NamedArray> out;
  for (Index l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    const auto b = net.bias(l);
    out.push_back({prefix + ".layer" + std::to_string(l) + ".weight", {w.rows(), w.cols()},
                   std::vector<double>(w.data(), w.data() + w.size())});
    out.push_back({prefix + ".layer" + std::to_string(l) + ".bias", {b.size()},
                   std::vector<double>(b.data(), b.data() + b.size())});
  }
  return out;
}

namespace {

const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw std::invalid_argument("checkpoint is missing array '" + name + "'");
}

}  // namespace

void load_mlp_arrays(Mlp<double>& net, const std::vector<NamedArray>& arrays, const std::string& prefix) {
  for (Index l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    auto b = net.bias(l);
    const auto& wa = find_array(arrays, prefix + ".layer" + std::to_string(l) + ".weight");
    const auto& ba = find_array(arrays, prefix + ".layer" + std::to_string(l) + ".bias");
    if (wa.shape != std::vector<Index>{w.rows(), w.cols()} || ba.shape != std::vector<Index>{b.size()}) {
      throw std::invalid_argument("checkpoint shape mismatch for '" + prefix + "' layer " + std::to_string(l));
    }
    w = Eigen::Map<const Eigen::MatrixXd>(wa.data.data(), w.rows(), w.cols());
    b = Eigen::Map<const Eigen::VectorXd>(ba.data.data(), b.size());
  }
}

}  // namespace uavwpcn
