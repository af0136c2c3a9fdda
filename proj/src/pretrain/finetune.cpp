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

#include <algorithm>
#include <stdexcept>

#include "cmaml/pretrain/pretrain.hpp"

namespace cmaml::pretrain {

FinetuneResult finetune_on_track(const model::DynamicsModel& pretrained, const control::MppiConfig& mppi,
                                 const sim::SimConfig& sim, const harness::Scenario& scenario, int laps,
                                 const adapt::AdaptConfig& adapt, std::uint64_t seed) {
  if (laps < 1) throw std::invalid_argument("finetune_on_track: need at least one lap");
  harness::Scenario cement = scenario;
  cement.layout = harness::SurfaceLayout::kCement;
  adapt::AdaptConfig gd = adapt;
  gd.mode = adapt::AdaptMode::kGd;
  harness::EpisodeConfig episode;
  episode.laps = laps;
  const harness::EpisodeResult run = harness::run_episode(pretrained, gd, mppi, sim, cement, episode, seed);
  if (!run.completed) throw std::runtime_error("finetune_on_track: run aborted: " + run.failure);

  FinetuneResult res;
  res.model = run.final_state.fast;
  res.laps = static_cast<int>(run.laps.size());
  for (const auto& s : run.steps) {
    if (s.lap > 0) res.max_track_cost = std::max(res.max_track_cost, s.track_cost);
  }
  double total = 0.0;
  int n = 0;
  for (const auto& e : run.events) {
    if (e.event == "fine_tune") {
      total += e.loss_before;
      ++n;
    }
  }
  res.mean_window_loss = n > 0 ? total / n : 0.0;
  return res;
}

}  // namespace cmaml::pretrain
