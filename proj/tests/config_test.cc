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

#include "gaulrq/config.h"

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include "absl/status/status.h"

namespace gaulrq::config {
namespace {

bool Mentions(const absl::Status& s, std::string_view text) {
  return std::string(s.message()).find(text) != std::string::npos;
}

TEST(ParseExperimentConfigTest, EmptyObjectUsesDefaults) {
  absl::StatusOr<ExperimentConfig> c = ParseExperimentConfig("{}");
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->sim.algorithm, wire::AlgorithmKind::kGauLrqSgd);
  EXPECT_EQ(c->objective.dim, 20);
  EXPECT_EQ(c->seed.run_id, "default");
  EXPECT_FALSE(c->bound_linf.has_value());
}

TEST(ParseExperimentConfigTest, ReadsEveryField) {
  absl::StatusOr<ExperimentConfig> c = ParseExperimentConfig(R"({
    "algorithm": "qg_sgd", "seed": 18446744073709551615, "run_id": "r",
    "federation": {"num_clients": 4, "clients_per_round": 2,
                   "local_steps": 3, "rounds": 9, "batch_size": 2,
                   "eta": 0.5, "client_weights": [0.25, 0.25, 0.25, 0.25]},
    "privacy": {"epsilon": 2.5, "delta": 1e-6, "tau": 0.7,
                "clip": {"mode": "median", "s2": 3.0},
                "stop_rule": "accountant", "max_rounds": 30},
    "objective": {"kind": "logistic", "dim": 7, "samples_per_client": 11,
                  "label_noise": 0.1, "heterogeneity": 0.2, "ridge": 0.01,
                  "init_scale": 1.5},
    "divergence_ceiling": 1000,
    "bounds": {"linf": 0.4},
    "output": {"dir": "out/x", "prefix": "p"}
  })");
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->sim.algorithm, wire::AlgorithmKind::kQgSgd);
  EXPECT_EQ(c->seed.root_seed, 18446744073709551615u);
  EXPECT_EQ(c->seed.run_id, "r");
  EXPECT_EQ(c->sim.num_clients, 4);
  EXPECT_EQ(c->sim.clients_per_round, 2);
  EXPECT_EQ(c->sim.local_steps, 3);
  EXPECT_EQ(c->sim.rounds, 9);
  EXPECT_EQ(c->sim.batch_size, 2);
  EXPECT_EQ(c->sim.eta, 0.5);
  EXPECT_EQ(c->sim.client_weights.size(), 4u);
  EXPECT_EQ(c->sim.budget.epsilon, 2.5);
  EXPECT_EQ(c->sim.budget.delta, 1e-6);
  EXPECT_EQ(c->sim.tau, 0.7);
  EXPECT_EQ(c->sim.clip.mode, privacy::ClipMode::kMedianAdaptive);
  EXPECT_EQ(c->sim.clip.s2, 3.0);
  EXPECT_EQ(c->sim.stop_rule, sim::StopRule::kAccountant);
  EXPECT_EQ(c->sim.max_rounds, 30);
  EXPECT_EQ(c->objective.kind, training::ObjectiveKind::kLogistic);
  EXPECT_EQ(c->objective.dim, 7);
  EXPECT_EQ(c->objective.samples_per_client, 11);
  EXPECT_EQ(c->objective.label_noise, 0.1);
  EXPECT_EQ(c->objective.heterogeneity, 0.2);
  EXPECT_EQ(c->objective.ridge, 0.01);
  EXPECT_EQ(c->objective.init_scale, 1.5);
  EXPECT_EQ(c->sim.divergence_ceiling, 1000.0);
  EXPECT_EQ(*c->bound_linf, 0.4);
  EXPECT_EQ(c->output.dir, "out/x");
  EXPECT_EQ(c->output.prefix, "p");
}

TEST(ParseExperimentConfigTest, BGreaterThanNNamesBothFields) {
  absl::StatusOr<ExperimentConfig> c = ParseExperimentConfig(
      R"({"federation": {"num_clients": 3, "clients_per_round": 5}})");
  ASSERT_FALSE(c.ok());
  EXPECT_TRUE(Mentions(c.status(), "federation.clients_per_round"));
  EXPECT_TRUE(Mentions(c.status(), "federation.num_clients"));
}

TEST(ParseExperimentConfigTest, CrossFieldRules) {
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"privacy": {"tau": 0}})").status(),
      "privacy.tau"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"federation": {"eta": -1}})").status(),
      "federation.eta"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"privacy": {"epsilon": 0}})").status(),
      "privacy.epsilon"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"privacy": {"delta": 1}})").status(),
      "privacy.delta"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"objective": {"dim": 0}})").status(),
      "objective.dim"));
}

TEST(ParseExperimentConfigTest, RejectsUnknownKeysWithPaths) {
  absl::StatusOr<ExperimentConfig> c = ParseExperimentConfig(
      R"({"federaton": {}, "privacy": {"clip": {"s3": 1}}})");
  ASSERT_FALSE(c.ok());
  EXPECT_TRUE(Mentions(c.status(), "federaton: unknown key"));
  EXPECT_TRUE(Mentions(c.status(), "privacy.clip.s3: unknown key"));
}

TEST(ParseExperimentConfigTest, RejectsWrongTypes) {
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"federation": {"rounds": 2.5}})").status(),
      "federation.rounds: expected an integer"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"seed": -3})").status(), "seed"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"algorithm": "sgd"})").status(), "algorithm"));
  EXPECT_TRUE(Mentions(
      ParseExperimentConfig(R"({"privacy": {"clip": {"mode": "auto"}}})")
          .status(),
      "privacy.clip.mode"));
  EXPECT_FALSE(ParseExperimentConfig("[1, 2]").ok());
  EXPECT_FALSE(ParseExperimentConfig("{not json").ok());
}

TEST(LoadExperimentConfigTest, ReadsFileAndReportsMissing) {
  const auto path =
      std::filesystem::temp_directory_path() / "gaulrq_config_test.json";
  std::ofstream(path) << R"({"algorithm": "gau_sgd"})";
  absl::StatusOr<ExperimentConfig> c = LoadExperimentConfig(path);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->sim.algorithm, wire::AlgorithmKind::kGauSgd);
  std::filesystem::remove(path);
  EXPECT_EQ(LoadExperimentConfig(path).status().code(),
            absl::StatusCode::kNotFound);
}

ExperimentConfig Small() {
  ExperimentConfig c;
  c.sim.num_clients = 6;
  c.sim.clients_per_round = 3;
  c.sim.rounds = 4;
  c.sim.local_steps = 2;
  c.sim.batch_size = 3;
  c.sim.eta = 0.05;
  c.objective.dim = 5;
  c.objective.samples_per_client = 8;
  return c;
}

TEST(BuildProblemTest, InitScaleMovesTheStartingPoint) {
  ExperimentConfig c = Small();
  absl::StatusOr<BuiltProblem> zero = BuildProblem(c);
  ASSERT_TRUE(zero.ok());
  EXPECT_EQ(zero->problem.theta0.norm(), 0.0);
  EXPECT_EQ(zero->problem.clients.size(), 6u);
  c.objective.init_scale = 2.0;
  absl::StatusOr<BuiltProblem> moved = BuildProblem(c);
  ASSERT_TRUE(moved.ok());
  EXPECT_GT(moved->problem.theta0.norm(), 0.0);
  EXPECT_NE(moved->spec.initial_gap, zero->spec.initial_gap);
}

TEST(RunExperimentTest, ProducesTraceAndBounds) {
  absl::StatusOr<ExperimentResult> r = RunExperiment(Small());
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->trace.rounds.size(), 4u);
  EXPECT_GT(r->bounds.gau_lrq, r->bounds.lsgd);
  EXPECT_EQ(r->bounds.inputs.dim, 5);
  EXPECT_GT(r->bounds.inputs.linf, 0.0);
  EXPECT_LE(r->bounds.inputs.linf, 1.0);
}

TEST(BoundInputsForRunTest, OverrideWins) {
  ExperimentConfig c = Small();
  c.bound_linf = 0.123;
  absl::StatusOr<ExperimentResult> r = RunExperiment(c);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->bounds.inputs.linf, 0.123);
}

}  // namespace
}  // namespace gaulrq::config
