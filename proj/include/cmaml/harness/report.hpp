// Copyright 2026 The cmaml-mppi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "cmaml/harness/experiments.hpp"

namespace cmaml::harness {

nlohmann::json to_json(const PretrainReport& r);
nlohmann::json to_json(const FinetuneReport& r);
nlohmann::json to_json(const InferenceReport& r);
nlohmann::json to_json(const ControlReport& r);
nlohmann::json to_json(const ReadaptReport& r);

/// Report readers; throw std::invalid_argument on unknown keys or wrong types.
PretrainReport pretrain_report_from_json(const nlohmann::json& j);
FinetuneReport finetune_report_from_json(const nlohmann::json& j);
InferenceReport inference_report_from_json(const nlohmann::json& j);
ControlReport control_report_from_json(const nlohmann::json& j);
ReadaptReport readapt_report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON followed by a newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Creates `dir` and checks that it is writable.
void prepare_output_dir(const std::filesystem::path& dir);

/// Rows per seed, columns per mode, then Mean and Min rows.
std::string inference_table_csv(const InferenceReport& r);
std::string control_table_csv(const ControlReport& r);
/// mode,seed,lap,time,control_error,mean_track_cost,mean_speed,boundary_crossings,steps
std::string lap_table_csv(const ControlReport& r);
std::string readapt_table_csv(const ReadaptReport& r);

/// File names inside the output directory.
inline constexpr const char* kPretrainJson = "pretrain.json";
inline constexpr const char* kFinetuneJson = "finetune.json";
inline constexpr const char* kInferenceJson = "inference.json";
inline constexpr const char* kControlJson = "control.json";
inline constexpr const char* kReadaptJson = "readapt.json";
inline constexpr const char* kSummaryJson = "summary.json";

void emit_pretrain_report(const std::filesystem::path& dir, const PretrainReport& r);
void emit_finetune_report(const std::filesystem::path& dir, const FinetuneReport& r);

/// inference.json, inference_table.csv, per-seed loss series CSV and loss-vs-time SVG.
void emit_inference_report(const std::filesystem::path& dir, const InferenceOutcome& out);

/// control.json, control_table.csv, laps.csv.
void emit_control_report(const std::filesystem::path& dir, const ControlReport& r);

/// Trajectory (first ten laps) and speed figures for one seed's runs.
void emit_control_figures(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          std::span<const ControlEpisode> runs);

/// Step telemetry and adaptation log of one run under dir/runs/.
void emit_run_logs(const std::filesystem::path& dir, const ControlEpisode& run);

/// readapt.json, readapt.csv and per-seed loss SVG.
void emit_readapt_report(const std::filesystem::path& dir, const ReadaptOutcome& out);

/// Reads whichever experiment reports exist in `dir`, rewrites their tables
/// from the parsed reports and writes summary.json. Throws when none exist.
nlohmann::json emit_summary(const std::filesystem::path& dir);

}  // namespace cmaml::harness
