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

#include "gaulrq/training.h"

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>
#include "absl/status/status.h"
#include "gaulrq/coupled_prng.h"

namespace gaulrq::training {
namespace {

const prng::SeedMaterial kSeed{.root_seed = 11, .run_id = "training"};

LocalDataset SmallData() {
  LocalDataset d;
  d.client_id = 2;
  d.features.resize(4, 2);
  d.features << 1, 0, 0, 1, 1, 1, 2, -1;
  d.targets.resize(4);
  d.targets << 1, 2, 3, 0;
  return d;
}

std::vector<int64_t> AllRows(int64_t n) {
  std::vector<int64_t> rows(static_cast<size_t>(n));
  std::iota(rows.begin(), rows.end(), int64_t{0});
  return rows;
}

TEST(StochasticGradientTest, FullBatchIsLocalGradient) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.1);
  const LocalDataset d = SmallData();
  Eigen::VectorXd theta(2);
  theta << 0.3, -0.7;
  const auto rows = AllRows(4);
  absl::StatusOr<Eigen::VectorXd> g = StochasticGradient(obj, theta, d, rows);
  ASSERT_TRUE(g.ok());
  EXPECT_LT((*g - obj.Gradient(theta, d)).norm(), 1e-15);
}

TEST(StochasticGradientTest, LeastSquaresGradientByHand) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  const LocalDataset d = SmallData();
  Eigen::VectorXd theta(2);
  theta << 1.0, 1.0;
  // Residuals X theta - t = (0, -1, -1, 1); X^T r / 4 = (1/4, -3/4).
  Eigen::VectorXd expected(2);
  expected << 0.25, -0.75;
  EXPECT_LT((obj.Gradient(theta, d) - expected).norm(), 1e-15);
  EXPECT_NEAR(obj.Loss(theta, d), 3.0 / 8.0, 1e-15);
}

TEST(StochasticGradientTest, ZeroAtExactSolution) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  LocalDataset d = SmallData();
  Eigen::VectorXd w(2);
  w << 0.4, -1.3;
  d.targets = d.features * w;
  const auto rows = AllRows(4);
  EXPECT_LT(StochasticGradient(obj, w, d, rows)->norm(), 1e-10);
}

TEST(StochasticGradientTest, SingletonBatchesAverageToFullGradient) {
  for (ObjectiveKind kind :
       {ObjectiveKind::kLeastSquares, ObjectiveKind::kLogistic}) {
    const Objective obj(kind, 0.05);
    LocalDataset d = SmallData();
    if (kind == ObjectiveKind::kLogistic) d.targets << 1, 0, 1, 0;
    Eigen::VectorXd theta(2);
    theta << -0.2, 0.9;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
    for (int64_t r = 0; r < 4; ++r) {
      const int64_t one[] = {r};
      sum += *StochasticGradient(obj, theta, d, one);
    }
    EXPECT_LT((sum / 4.0 - obj.Gradient(theta, d)).norm(), 1e-12);
  }
}

TEST(StochasticGradientTest, LogisticMatchesFiniteDifferences) {
  const Objective obj(ObjectiveKind::kLogistic, 0.1);
  LocalDataset d = SmallData();
  d.targets << 1, 0, 1, 1;
  Eigen::VectorXd theta(2);
  theta << 0.5, -0.25;
  const Eigen::VectorXd g = obj.Gradient(theta, d);
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
    e(j) = 1e-6;
    const double fd = (obj.Loss(theta + e, d) - obj.Loss(theta - e, d)) / 2e-6;
    EXPECT_NEAR(g(j), fd, 1e-8);
  }
}

TEST(StochasticGradientTest, RejectsBadBatches) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  const LocalDataset d = SmallData();
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  EXPECT_FALSE(StochasticGradient(obj, theta, d, {}).ok());
  const int64_t bad[] = {4};
  EXPECT_EQ(StochasticGradient(obj, theta, d, bad).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(
      StochasticGradient(obj, Eigen::VectorXd::Zero(3), d, AllRows(4)).ok());
}

TEST(SampleBatchTest, DistinctRowsInRange) {
  prng::UniformStream s(kSeed, {});
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int64_t> b = SampleBatch(10, 4, s);
    ASSERT_EQ(b.size(), 4u);
    std::sort(b.begin(), b.end());
    ASSERT_TRUE(std::adjacent_find(b.begin(), b.end()) == b.end());
    ASSERT_GE(b.front(), 0);
    ASSERT_LT(b.back(), 10);
  }
  EXPECT_EQ(SampleBatch(3, 5, s), AllRows(3));
}

TEST(LocalRoundsTest, SingleFullBatchStep) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  const LocalDataset d = SmallData();
  Eigen::VectorXd theta(2);
  theta << 0.1, 0.2;
  absl::StatusOr<Eigen::VectorXd> delta = LocalRounds(
      obj, theta, d, {.local_steps = 1, .eta = 0.3, .batch_size = 4}, kSeed, 0);
  ASSERT_TRUE(delta.ok());
  EXPECT_LT((*delta + 0.3 * obj.Gradient(theta, d)).norm(), 1e-15);
}

TEST(LocalRoundsTest, ZeroStepSizeGivesZeroUpdate) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  absl::StatusOr<Eigen::VectorXd> delta =
      LocalRounds(obj, Eigen::VectorXd::Ones(2), SmallData(),
                  {.local_steps = 3, .eta = 0.0, .batch_size = 1}, kSeed, 4);
  ASSERT_TRUE(delta.ok());
  EXPECT_EQ(delta->norm(), 0.0);
}

TEST(LocalRoundsTest, MatchesUnrolledSteps) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  const LocalDataset d = SmallData();
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(2, 0.5);
  const double eta = 0.2;
  const uint64_t round = 6;

  Eigen::VectorXd theta = theta0;
  for (uint64_t q = 0; q < 3; ++q) {
    prng::UniformStream s(kSeed,
                          {.client_id = 2, .round = round, .element_index = q,
                           .domain = prng::StreamDomain::kLocalBatch});
    const std::vector<int64_t> batch = SampleBatch(4, 2, s);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    for (int64_t r : batch) {
      const double residual = d.features.row(r).dot(theta) - d.targets(r);
      g += residual * d.features.row(r).transpose();
    }
    theta -= eta * g / 2.0;
  }
  absl::StatusOr<Eigen::VectorXd> delta = LocalRounds(
      obj, theta0, d, {.local_steps = 3, .eta = eta, .batch_size = 2}, kSeed,
      round);
  ASSERT_TRUE(delta.ok());
  EXPECT_LT((*delta - (theta - theta0)).norm(), 1e-14);
}

TEST(LocalRoundsTest, DivergenceIsAborted) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  absl::StatusOr<Eigen::VectorXd> delta =
      LocalRounds(obj, Eigen::VectorXd::Ones(2), SmallData(),
                  {.local_steps = 50, .eta = 10.0, .batch_size = 4,
                   .divergence_ceiling = 1e6},
                  kSeed, 0);
  EXPECT_EQ(delta.status().code(), absl::StatusCode::kAborted);
}

TEST(LocalRoundsTest, RejectsBadConfig) {
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  EXPECT_FALSE(LocalRounds(obj, theta, SmallData(), {.local_steps = 0}, kSeed,
                           0)
                   .ok());
  EXPECT_FALSE(LocalRounds(obj, theta, SmallData(), {.eta = -1.0}, kSeed, 0)
                   .ok());
  EXPECT_FALSE(LocalRounds(obj, theta, SmallData(), {.batch_size = 0}, kSeed,
                           0)
                   .ok());
}

TEST(EstimateTauTest, Examples) {
  EXPECT_NEAR(EstimateTau(0.81, 1.0, 2)->tau, 0.9, 1e-15);
  absl::StatusOr<TauEstimate> flat = EstimateTau(1.0, 1.0, 3);
  EXPECT_EQ(flat->tau, 1.0);
  EXPECT_FALSE(flat->clamped);
  absl::StatusOr<TauEstimate> up = EstimateTau(2.0, 1.0, 3);
  EXPECT_EQ(up->tau, 1.0);
  EXPECT_TRUE(up->clamped);
  EXPECT_FALSE(EstimateTau(0.0, 1.0, 1).ok());
  EXPECT_FALSE(EstimateTau(0.5, 1.0, 0).ok());
}

TEST(WeightedErrorTest, Examples) {
  const std::vector<double> flat(7, 2.5);
  EXPECT_NEAR(*WeightedError(flat, 0.6), 2.5, 1e-15);
  const std::vector<double> g = {1.0, 2.0, 6.0};
  EXPECT_NEAR(*WeightedError(g, 1.0), 3.0, 1e-15);
  const std::vector<double> two = {1.0, 3.0};
  EXPECT_NEAR(*WeightedError(two, 0.5), 7.0 / 3.0, 1e-15);
  EXPECT_FALSE(WeightedError({}, 0.5).ok());
  EXPECT_FALSE(WeightedError(two, 0.0).ok());
}

TEST(WeightedErrorTest, LongRunsStayFinite) {
  const std::vector<double> g(5000, 1.0);
  absl::StatusOr<double> e = WeightedError(g, 0.5);
  ASSERT_TRUE(e.ok());
  EXPECT_NEAR(*e, 1.0, 1e-12);
}

TEST(SynthPartitionTest, ShapesAndDeterminism) {
  const SynthConfig c{.num_clients = 2, .dim = 2, .samples_per_client = 3};
  absl::StatusOr<SynthProblem> a = SynthPartition(kSeed, c);
  absl::StatusOr<SynthProblem> b = SynthPartition(kSeed, c);
  ASSERT_TRUE(a.ok() && b.ok());
  ASSERT_EQ(a->clients.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a->clients[i].features.rows(), 3);
    EXPECT_EQ(a->clients[i].features.cols(), 2);
    EXPECT_EQ(a->clients[i].targets.size(), 3);
    EXPECT_EQ(a->clients[i].features, b->clients[i].features);
    EXPECT_EQ(a->clients[i].targets, b->clients[i].targets);
    EXPECT_EQ(a->clients[i].client_id, static_cast<int64_t>(i));
  }
  absl::StatusOr<SynthProblem> other =
      SynthPartition({.root_seed = 12, .run_id = "training"}, c);
  EXPECT_NE(other->clients[0].features, a->clients[0].features);
}

TEST(SynthPartitionTest, LogisticLabelsAreBinary) {
  absl::StatusOr<SynthProblem> p = SynthPartition(
      kSeed, {.kind = ObjectiveKind::kLogistic, .num_clients = 3, .dim = 4,
              .samples_per_client = 50});
  ASSERT_TRUE(p.ok());
  for (const LocalDataset& c : p->clients) {
    for (int64_t r = 0; r < c.targets.size(); ++r) {
      EXPECT_TRUE(c.targets(r) == 0.0 || c.targets(r) == 1.0);
    }
  }
}

TEST(SynthPartitionTest, RejectsBadConfig) {
  EXPECT_FALSE(SynthPartition(kSeed, {.num_clients = 0}).ok());
  EXPECT_FALSE(SynthPartition(kSeed, {.noise_std = -1.0}).ok());
}

TEST(CharacterizeTest, NoiselessPlantedModelIsRecovered) {
  absl::StatusOr<SynthProblem> p = SynthPartition(
      kSeed, {.num_clients = 5, .dim = 4, .samples_per_client = 20});
  ASSERT_TRUE(p.ok());
  const Objective obj(ObjectiveKind::kLeastSquares, 0.0);
  absl::StatusOr<ObjectiveSpec> spec =
      Characterize(obj, p->clients, Eigen::VectorXd::Zero(4));
  ASSERT_TRUE(spec.ok()) << spec.status();
  EXPECT_LT((spec->optimum - p->planted).norm(), 1e-10);
  EXPECT_NEAR(spec->optimum_value, 0.0, 1e-20);
  EXPECT_NEAR(spec->initial_gap,
              obj.GlobalLoss(Eigen::VectorXd::Zero(4), p->clients), 1e-12);
  EXPECT_GT(spec->smoothness, 0.0);
  EXPECT_GT(spec->alpha_sq, 0.0);
}

TEST(CharacterizeTest, SmoothnessBoundsCurvature) {
  absl::StatusOr<SynthProblem> p = SynthPartition(
      kSeed, {.num_clients = 4, .dim = 3, .samples_per_client = 10});
  const Objective obj(ObjectiveKind::kLeastSquares, 0.2);
  absl::StatusOr<ObjectiveSpec> spec =
      Characterize(obj, p->clients, Eigen::VectorXd::Zero(3));
  ASSERT_TRUE(spec.ok());
  prng::UniformStream s(kSeed, {});
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a(j) = s.NextUniform() * 4 - 2;
      b(j) = s.NextUniform() * 4 - 2;
    }
    const double lhs = (obj.GlobalGradient(a, p->clients) -
                        obj.GlobalGradient(b, p->clients))
                           .norm();
    EXPECT_LE(lhs, spec->smoothness * (a - b).norm() * (1 + 1e-12));
  }
}

TEST(CharacterizeTest, LogisticOptimumIsStationary) {
  absl::StatusOr<SynthProblem> p = SynthPartition(
      kSeed, {.kind = ObjectiveKind::kLogistic, .num_clients = 4, .dim = 3,
              .samples_per_client = 40});
  const Objective obj(ObjectiveKind::kLogistic, 0.01);
  absl::StatusOr<ObjectiveSpec> spec =
      Characterize(obj, p->clients, Eigen::VectorXd::Zero(3));
  ASSERT_TRUE(spec.ok()) << spec.status();
  EXPECT_LT(obj.GlobalGradient(spec->optimum, p->clients).norm(), 1e-9);
  EXPECT_GT(spec->initial_gap, 0.0);
}

}  // namespace
}  // namespace gaulrq::training
