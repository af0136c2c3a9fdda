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

// Command-line driver for the experiment pipeline:
//   pretrain -> finetune -> record-log -> infer-exp / control-exp / readapt-exp -> report

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmaml/harness/config.hpp"
#include "cmaml/harness/experiments.hpp"
#include "cmaml/harness/report.hpp"
#include "cmaml/model/trajectory_log.hpp"

namespace {

using namespace cmaml;
using harness::ExperimentConfig;

struct CommonOptions {
  std::vector<std::string> configs;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> modes;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o, bool with_seeds, bool with_modes) {
  sub->add_option("-c,--config", o.configs,
                  "Config file(s), applied in order as JSON merge patches over the built-in defaults")
      ->check(CLI::ExistingFile);
  sub->add_option("-o,--out", o.out, "Output directory (overrides output_dir)");
  if (with_seeds) sub->add_option("-s,--seeds", o.seeds, "Seed list, e.g. 1,2,3 (overrides seeds)")->delimiter(',');
  if (with_modes) {
    sub->add_option("-m,--modes", o.modes, "Mode filter, subset of fixed,gd,cmaml")
        ->delimiter(',')
        ->check(CLI::IsMember({"fixed", "gd", "cmaml"}));
  }
  sub->add_flag("-q,--quiet", o.quiet, "Suppress progress messages");
}

ExperimentConfig build_config(const CommonOptions& o) {
  std::vector<std::filesystem::path> paths(o.configs.begin(), o.configs.end());
  ExperimentConfig cfg = harness::load_configs(paths);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.modes.empty()) {
    cfg.modes.clear();
    for (const auto& m : o.modes) cfg.modes.push_back(adapt::parse_adapt_mode(m));
  }
  cfg.validate();
  harness::prepare_output_dir(cfg.output_dir);
  harness::save_config(cfg.output_dir / "config.resolved.json", cfg);
  return cfg;
}

harness::ProgressFn progress_printer(const CommonOptions& o) {
  if (o.quiet) return {};
  const auto start = std::chrono::steady_clock::now();
  return [start](const std::string& msg) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
  };
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_pretrain(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  harness::PretrainOutcome res = harness::run_pretrain(cfg, progress_printer(o));
  const auto ckpt = cfg.resolve(cfg.pretrained_checkpoint);
  nn::save_checkpoint(ckpt, res.model.to_checkpoint());
  harness::emit_pretrain_report(cfg.output_dir, res.report);
  nlohmann::json j = harness::to_json(res.report);
  j.erase("curve");
  print_json(j);
  std::cerr << "wrote " << ckpt.string() << "\n";
  return 0;
}

int cmd_finetune(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const model::DynamicsModel pre = harness::load_model(cfg.resolve(cfg.pretrained_checkpoint), "pretrain");
  harness::FinetuneOutcome res = harness::run_finetune(cfg, pre);
  const auto ckpt = cfg.resolve(cfg.checkpoint);
  nn::save_checkpoint(ckpt, res.model.to_checkpoint());
  harness::emit_finetune_report(cfg.output_dir, res.report);
  print_json(harness::to_json(res.report));
  std::cerr << "wrote " << ckpt.string() << "\n";
  return 0;
}

int cmd_record_log(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const model::DynamicsModel m = harness::load_model(cfg.resolve(cfg.checkpoint), "finetune");
  const auto progress = progress_printer(o);
  std::filesystem::create_directories(cfg.resolve(cfg.log_dir));
  for (std::uint64_t seed : cfg.seeds) {
    const auto log = harness::record_drive(cfg, m, seed);
    const auto path = harness::drive_log_path(cfg, seed);
    model::save_trajectory_csv(path, log);
    if (progress) progress("wrote " + path.string() + " (" + std::to_string(log.size()) + " samples)");
  }
  return 0;
}

int cmd_infer(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const model::DynamicsModel m = harness::load_model(cfg.resolve(cfg.checkpoint), "finetune");
  const harness::InferenceOutcome res = harness::run_inference_experiment(cfg, m, progress_printer(o));
  harness::emit_inference_report(cfg.output_dir, res);
  std::cout << harness::inference_table_csv(res.report);
  return 0;
}

int cmd_control(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const model::DynamicsModel m = harness::load_model(cfg.resolve(cfg.checkpoint), "finetune");
  std::vector<harness::ControlEpisode> figure_runs;  // first seed only
  const std::uint64_t figure_seed = cfg.seeds.front();
  const harness::ControlReport rep = harness::run_control_experiment(
      cfg, m,
      [&](const harness::ControlEpisode& ep) {
        harness::emit_run_logs(cfg.output_dir, ep);
        if (ep.run.seed == figure_seed) figure_runs.push_back(ep);
      },
      progress_printer(o));
  harness::emit_control_report(cfg.output_dir, rep);
  harness::emit_control_figures(cfg.output_dir, cfg, figure_runs);
  std::cout << harness::control_table_csv(rep);
  return 0;
}

int cmd_readapt(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const model::DynamicsModel m = harness::load_model(cfg.resolve(cfg.checkpoint), "finetune");
  const harness::ReadaptOutcome res = harness::run_readapt_experiment(cfg, m, progress_printer(o));
  harness::emit_readapt_report(cfg.output_dir, res);
  std::cout << harness::readapt_table_csv(res.report);
  return 0;
}

int cmd_report(const CommonOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  print_json(harness::emit_summary(cfg.output_dir));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-MAML + MPPI simulation experiments"};
  app.require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
    bool seeds, modes;
    int (*run)(const CommonOptions&);
  };
  const std::vector<Sub> subs{
      {"pretrain", "Collect cement driving data and train the dynamics network", false, false, cmd_pretrain},
      {"finetune", "Fine-tune the pre-trained network on the cement oval", false, false, cmd_finetune},
      {"record-log", "Record fixed-model drives on the two-surface oval for the inference replay", true, false,
       cmd_record_log},
      {"infer-exp", "Replay recorded drives through each update policy (inference comparison)", true, true,
       cmd_infer},
      {"control-exp", "Closed-loop lap runs per mode and seed (control comparison)", true, true, cmd_control},
      {"readapt-exp", "Updates needed to re-reach the A-surface loss on an A-B-A stream", true, false, cmd_readapt},
      {"report", "Rebuild tables and summary.json from the reports in the output directory", false, false,
       cmd_report},
  };
  CommonOptions opts;
  std::vector<std::pair<CLI::App*, const Sub*>> handles;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, opts, s.seeds, s.modes);
    handles.emplace_back(sub, &s);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (auto [sub, s] : handles) {
      if (sub->parsed()) return s->run(opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
