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

#ifndef GAULRQ_TRAINING_H_
#define GAULRQ_TRAINING_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/statusor.h"
#include "gaulrq/coupled_prng.h"

namespace gaulrq::training {

enum class ObjectiveKind { kLeastSquares, kLogistic };

struct LocalDataset {
  Eigen::MatrixXd features;  // n_i x d
  Eigen::VectorXd targets;   // n_i
  int64_t client_id = 0;
};

// Per-client empirical risk plus an optional ridge term:
//   least squares: (1/2n) ||X theta - t||^2 + (ridge/2) ||theta||^2
//   logistic:      (1/n) sum softplus(x.theta) - t x.theta + (ridge/2) ...
// with t in {0, 1} for logistic. The global objective weights every client
// equally (p_i = 1/N).
class Objective {
 public:
  Objective(ObjectiveKind kind, double ridge) : kind_(kind), ridge_(ridge) {}

  ObjectiveKind kind() const { return kind_; }
  double ridge() const { return ridge_; }

  double Loss(const Eigen::VectorXd& theta, const LocalDataset& data) const;
  Eigen::VectorXd Gradient(const Eigen::VectorXd& theta,
                           const LocalDataset& data) const;
  // Gradient of the loss restricted to the rows in `batch`.
  Eigen::VectorXd BatchGradient(const Eigen::VectorXd& theta,
                                const LocalDataset& data,
                                std::span<const int64_t> batch) const;

  double GlobalLoss(const Eigen::VectorXd& theta,
                    std::span<const LocalDataset> clients) const;
  Eigen::VectorXd GlobalGradient(const Eigen::VectorXd& theta,
                                 std::span<const LocalDataset> clients) const;

 private:
  // d loss / d z for one row with score z and target t.
  double ScoreDerivative(double z, double t) const;
  double RowLoss(double z, double t) const;

  ObjectiveKind kind_;
  double ridge_;
};

// Constants every convergence bound needs, measured on a concrete problem.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kLeastSquares;
  int64_t dim = 0;
  double smoothness = 0.0;      // nu
  double alpha_sq = 0.0;        // alpha^2, measured at theta_0
  double optimum_value = 0.0;   // F(theta*)
  double initial_gap = 0.0;     // F(theta_0) - F(theta*)
  double ridge = 0.0;
  Eigen::VectorXd optimum;
};

// Smoothness is analytic (largest eigenvalue of the averaged Gram matrix,
// scaled by 1/4 for logistic); F(theta*) is a linear solve for least squares
// and a damped Newton solve for logistic. alpha^2 is the largest per-client
// mean squared deviation of single-sample gradients from the client gradient
// at theta_0.
absl::StatusOr<ObjectiveSpec> Characterize(
    const Objective& objective, std::span<const LocalDataset> clients,
    const Eigen::VectorXd& theta0);

// Mean gradient over `batch`. Fails on an empty batch or an index outside
// the dataset.
absl::StatusOr<Eigen::VectorXd> StochasticGradient(
    const Objective& objective, const Eigen::VectorXd& theta,
    const LocalDataset& data, std::span<const int64_t> batch);

// `batch_size` distinct row indices drawn without replacement by a partial
// Fisher-Yates shuffle, or every row in order when batch_size >= n.
std::vector<int64_t> SampleBatch(int64_t n, int64_t batch_size,
                                 prng::UniformStream& stream);

struct LocalSgdConfig {
  int64_t local_steps = 1;  // Q
  double eta = 0.1;
  int64_t batch_size = 1;
  double divergence_ceiling = 1e8;
};

// Runs Q local SGD steps from `theta` and returns Delta = theta_Q - theta_0.
// Step q draws its batch from the kLocalBatch stream at
// (client_id, round, element_index = q). Returns kAborted when ||theta_q||
// exceeds the divergence ceiling or becomes non-finite.
absl::StatusOr<Eigen::VectorXd> LocalRounds(const Objective& objective,
                                            const Eigen::VectorXd& theta,
                                            const LocalDataset& data,
                                            const LocalSgdConfig& config,
                                            const prng::SeedMaterial& seed,
                                            uint64_t round);

struct TauEstimate {
  double tau = 1.0;
  bool clamped = false;
};

// [F_k / F_0]^(1/k), clamped into (0, 1].
absl::StatusOr<TauEstimate> EstimateTau(double loss_k, double loss_0,
                                        int64_t k);

// sum_k tau^-k g_k / sum_k tau^-k, evaluated with weights tau^(K-1-k) so that
// long runs with small tau do not overflow.
absl::StatusOr<double> WeightedError(std::span<const double> grad_sq_norms,
                                     double tau);

struct SynthConfig {
  ObjectiveKind kind = ObjectiveKind::kLeastSquares;
  int64_t num_clients = 10;
  int64_t dim = 5;
  int64_t samples_per_client = 20;
  double noise_std = 0.0;
  // Per-client planted-vector shift scale; 0 gives an iid partition.
  double heterogeneity = 0.0;
};

struct SynthProblem {
  std::vector<LocalDataset> clients;
  Eigen::VectorXd planted;
};

// Planted model: w* ~ N(0, I), features iid N(0, 1). Least-squares targets
// are X w* + N(0, noise_std^2); logistic targets are Bernoulli(sigmoid(X w*)).
absl::StatusOr<SynthProblem> SynthPartition(const prng::SeedMaterial& seed,
                                            const SynthConfig& config);

}  // namespace gaulrq::training

#endif  // GAULRQ_TRAINING_H_
