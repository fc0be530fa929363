/*
 * Copyright 2026 The gaulrq Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// JSON experiment configuration and the end-to-end experiment driver.
//
// Every key is optional and falls back to the default below; unknown keys
// are rejected. Layout:
//
//   {
//     "algorithm": "gau_lrq_sgd",
//     "seed": 1, "run_id": "default",
//     "federation": {"num_clients", "clients_per_round", "local_steps",
//                    "rounds", "batch_size", "eta", "client_weights"},
//     "privacy": {"epsilon", "delta", "tau",
//                 "clip": {"mode": "fixed" | "median", "s2"},
//                 "stop_rule": "fixed_rounds" | "accountant", "max_rounds"},
//     "objective": {"kind": "least_squares" | "logistic", "dim",
//                   "samples_per_client", "label_noise", "heterogeneity",
//                   "ridge", "init_scale"},
//     "divergence_ceiling": 1e8,
//     "bounds": {"linf"},
//     "output": {"dir", "prefix"}
//   }

#ifndef GAULRQ_CONFIG_H_
#define GAULRQ_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "gaulrq/analysis.h"
#include "gaulrq/coupled_prng.h"
#include "gaulrq/orchestrator.h"
#include "gaulrq/training.h"

namespace gaulrq::config {

struct ObjectiveConfig {
  training::ObjectiveKind kind = training::ObjectiveKind::kLeastSquares;
  int64_t dim = 20;
  int64_t samples_per_client = 50;
  double label_noise = 0.0;
  double heterogeneity = 0.0;
  double ridge = 0.0;
  double init_scale = 0.0;  // theta_0 = init_scale * N(0, I)
};

struct OutputConfig {
  std::string dir;  // empty: caller decides
  std::string prefix = "run";
};

struct ExperimentConfig {
  sim::SimulationConfig sim;
  ObjectiveConfig objective;
  prng::SeedMaterial seed{.root_seed = 1, .run_id = "default"};
  std::optional<double> bound_linf;  // overrides the measured ||.||_inf
  OutputConfig output;
};

// Parses and validates. Errors list every offending field path, one per
// line.
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view json);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::filesystem::path& path);

absl::Status ValidateExperimentConfig(const ExperimentConfig& config);

struct BuiltProblem {
  sim::Problem problem;
  training::ObjectiveSpec spec;
};

absl::StatusOr<BuiltProblem> BuildProblem(const ExperimentConfig& config);

// Bound inputs for a finished run. linf is the configured override, else the
// mean clipped-update sup norm over all uploads, else S2.
analysis::BoundInputs BoundInputsForRun(const ExperimentConfig& config,
                                        const training::ObjectiveSpec& spec,
                                        const sim::RunTrace& trace);

struct ExperimentResult {
  training::ObjectiveSpec spec;
  sim::RunTrace trace;
  analysis::BoundReport bounds;
};

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& config);

}  // namespace gaulrq::config

#endif  // GAULRQ_CONFIG_H_
