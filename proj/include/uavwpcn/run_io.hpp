#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavwpcn/orchestrator.hpp"

namespace uavwpcn {

// metrics.csv: one row per training episode.
std::string metrics_csv_header();
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpisodeMetrics>& rows);
std::vector<EpisodeMetrics> read_metrics_csv(const std::filesystem::path& path);

// eval.csv: one row per evaluation episode; eval_wn.csv: one row per (episode, WN).
void write_eval_csv(const std::filesystem::path& path, const std::vector<EpisodeReport>& reports);
void write_eval_wn_csv(const std::filesystem::path& path, const std::vector<EpisodeReport>& reports);
std::vector<EpisodeReport> read_eval_csv(const std::filesystem::path& eval_path,
                                         const std::filesystem::path& wn_path);

// trajectory.jsonl: one JSON object per slot.
nlohmann::json slot_record_to_json(const SlotRecord& r);
SlotRecord slot_record_from_json(const nlohmann::json& j);
void write_trajectory_jsonl(const std::filesystem::path& path, const std::vector<SlotRecord>& records);
std::vector<SlotRecord> read_trajectory_jsonl(const std::filesystem::path& path);

void write_tbar_csv(const std::filesystem::path& path, const std::vector<TbarPoint>& curve);
std::vector<TbarPoint> read_tbar_csv(const std::filesystem::path& path);

void write_scalability_csv(const std::filesystem::path& path, const std::vector<ScalabilityCell>& table);

// checkpoints/uav{u}_{net}.json for net in checkpoint_networks().
const std::vector<std::string>& checkpoint_networks();
void save_checkpoints(const std::filesystem::path& dir, const AgentSet& agents);
AgentSet load_checkpoints(const std::filesystem::path& dir, const WorldConfig& config);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace uavwpcn
