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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "gaulrq/normal.h"

namespace gaulrq::training {
namespace {

using prng::StreamDomain;

constexpr uint64_t kPlantedStream = std::numeric_limits<uint64_t>::max();

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Eigen::MatrixXd AveragedGram(std::span<const LocalDataset> clients) {
  const Eigen::Index d = clients.front().features.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  for (const LocalDataset& c : clients) {
    gram += c.features.transpose() * c.features /
            static_cast<double>(c.features.rows());
  }
  return gram / static_cast<double>(clients.size());
}

Eigen::MatrixXd LogisticHessian(const Eigen::VectorXd& theta,
                                std::span<const LocalDataset> clients,
                                double ridge) {
  const Eigen::Index d = theta.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (const LocalDataset& c : clients) {
    const Eigen::VectorXd z = c.features * theta;
    Eigen::VectorXd w(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      const double p = Sigmoid(z(r));
      w(r) = p * (1.0 - p);
    }
    h += c.features.transpose() * w.asDiagonal() * c.features /
         static_cast<double>(c.features.rows());
  }
  h /= static_cast<double>(clients.size());
  h.diagonal().array() += ridge;
  return h;
}

Eigen::VectorXd SolveLogistic(const Objective& objective,
                              std::span<const LocalDataset> clients,
                              Eigen::VectorXd theta) {
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd grad = objective.GlobalGradient(theta, clients);
    if (grad.norm() < 1e-13) break;
    const Eigen::MatrixXd hess =
        LogisticHessian(theta, clients, objective.ridge());
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    const double f0 = objective.GlobalLoss(theta, clients);
    double t = 1.0;
    Eigen::VectorXd next = theta - step;
    while (objective.GlobalLoss(next, clients) > f0 - 1e-4 * t * grad.dot(step) &&
           t > 1e-10) {
      t *= 0.5;
      next = theta - t * step;
    }
    theta = next;
  }
  return theta;
}

}  // namespace

double Objective::RowLoss(double z, double t) const {
  if (kind_ == ObjectiveKind::kLeastSquares) return 0.5 * (z - t) * (z - t);
  return Softplus(z) - t * z;
}

double Objective::ScoreDerivative(double z, double t) const {
  if (kind_ == ObjectiveKind::kLeastSquares) return z - t;
  return Sigmoid(z) - t;
}

double Objective::Loss(const Eigen::VectorXd& theta,
                       const LocalDataset& data) const {
  const Eigen::VectorXd z = data.features * theta;
  double sum = 0.0;
  for (Eigen::Index r = 0; r < z.size(); ++r) sum += RowLoss(z(r), data.targets(r));
  return sum / static_cast<double>(z.size()) +
         0.5 * ridge_ * theta.squaredNorm();
}

Eigen::VectorXd Objective::Gradient(const Eigen::VectorXd& theta,
                                    const LocalDataset& data) const {
  const Eigen::VectorXd z = data.features * theta;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index r = 0; r < z.size(); ++r) {
    residual(r) = ScoreDerivative(z(r), data.targets(r));
  }
  return data.features.transpose() * residual / static_cast<double>(z.size()) +
         ridge_ * theta;
}

Eigen::VectorXd Objective::BatchGradient(const Eigen::VectorXd& theta,
                                         const LocalDataset& data,
                                         std::span<const int64_t> batch) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  for (int64_t r : batch) {
    const auto row = data.features.row(r);
    grad += ScoreDerivative(row.dot(theta), data.targets(r)) * row.transpose();
  }
  return grad / static_cast<double>(batch.size()) + ridge_ * theta;
}

double Objective::GlobalLoss(const Eigen::VectorXd& theta,
                             std::span<const LocalDataset> clients) const {
  double sum = 0.0;
  for (const LocalDataset& c : clients) sum += Loss(theta, c);
  return sum / static_cast<double>(clients.size());
}

Eigen::VectorXd Objective::GlobalGradient(
    const Eigen::VectorXd& theta, std::span<const LocalDataset> clients) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  for (const LocalDataset& c : clients) grad += Gradient(theta, c);
  return grad / static_cast<double>(clients.size());
}

absl::StatusOr<ObjectiveSpec> Characterize(
    const Objective& objective, std::span<const LocalDataset> clients,
    const Eigen::VectorXd& theta0) {
  if (clients.empty()) return absl::InvalidArgumentError("no clients");
  const Eigen::Index d = theta0.size();
  for (const LocalDataset& c : clients) {
    if (c.features.cols() != d || c.features.rows() != c.targets.size() ||
        c.features.rows() == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("client ", c.client_id, " has inconsistent shape"));
    }
  }

  ObjectiveSpec spec;
  spec.kind = objective.kind();
  spec.dim = d;
  spec.ridge = objective.ridge();

  const Eigen::MatrixXd gram = AveragedGram(clients);
  const double lambda_max =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double curvature =
      objective.kind() == ObjectiveKind::kLeastSquares ? 1.0 : 0.25;
  spec.smoothness = curvature * lambda_max + objective.ridge();
  if (!(spec.smoothness > 0.0)) {
    return absl::FailedPreconditionError("objective has zero curvature");
  }

  if (objective.kind() == ObjectiveKind::kLeastSquares) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (const LocalDataset& c : clients) {
      rhs += c.features.transpose() * c.targets /
             static_cast<double>(c.features.rows());
    }
    rhs /= static_cast<double>(clients.size());
    Eigen::MatrixXd system = gram;
    system.diagonal().array() += objective.ridge();
    spec.optimum = system.completeOrthogonalDecomposition().solve(rhs);
  } else {
    spec.optimum = SolveLogistic(objective, clients, theta0);
  }
  spec.optimum_value = objective.GlobalLoss(spec.optimum, clients);
  spec.initial_gap = objective.GlobalLoss(theta0, clients) - spec.optimum_value;

  for (const LocalDataset& c : clients) {
    const Eigen::VectorXd mean = objective.Gradient(theta0, c);
    double total = 0.0;
    for (int64_t r = 0; r < c.features.rows(); ++r) {
      const int64_t one[] = {r};
      total += (objective.BatchGradient(theta0, c, one) - mean).squaredNorm();
    }
    spec.alpha_sq = std::max(
        spec.alpha_sq, total / static_cast<double>(c.features.rows()));
  }
  return spec;
}

absl::StatusOr<Eigen::VectorXd> StochasticGradient(
    const Objective& objective, const Eigen::VectorXd& theta,
    const LocalDataset& data, std::span<const int64_t> batch) {
  if (batch.empty()) return absl::InvalidArgumentError("empty batch");
  if (theta.size() != data.features.cols()) {
    return absl::InvalidArgumentError("theta dimension mismatch");
  }
  for (int64_t r : batch) {
    if (r < 0 || r >= data.features.rows()) {
      return absl::OutOfRangeError(
          absl::StrCat("batch index ", r, " outside dataset of ",
                       data.features.rows(), " rows"));
    }
  }
  return objective.BatchGradient(theta, data, batch);
}

std::vector<int64_t> SampleBatch(int64_t n, int64_t batch_size,
                                 prng::UniformStream& stream) {
  std::vector<int64_t> rows(static_cast<size_t>(n));
  std::iota(rows.begin(), rows.end(), int64_t{0});
  if (batch_size >= n) return rows;
  for (int64_t i = 0; i < batch_size; ++i) {
    const auto pick =
        i + static_cast<int64_t>(stream.NextBelow(static_cast<uint64_t>(n - i)));
    std::swap(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(pick)]);
  }
  rows.resize(static_cast<size_t>(batch_size));
  return rows;
}

absl::StatusOr<Eigen::VectorXd> LocalRounds(const Objective& objective,
                                            const Eigen::VectorXd& theta,
                                            const LocalDataset& data,
                                            const LocalSgdConfig& config,
                                            const prng::SeedMaterial& seed,
                                            uint64_t round) {
  if (config.local_steps < 1) {
    return absl::InvalidArgumentError("local_steps must be >= 1");
  }
  if (!(config.eta >= 0.0) || !std::isfinite(config.eta)) {
    return absl::InvalidArgumentError("eta must be finite and >= 0");
  }
  if (config.batch_size < 1) {
    return absl::InvalidArgumentError("batch_size must be >= 1");
  }
  Eigen::VectorXd local = theta;
  for (int64_t q = 0; q < config.local_steps; ++q) {
    prng::UniformStream stream(
        seed, {.client_id = static_cast<uint64_t>(data.client_id),
               .round = round,
               .element_index = static_cast<uint64_t>(q),
               .domain = StreamDomain::kLocalBatch});
    const std::vector<int64_t> batch =
        SampleBatch(data.features.rows(), config.batch_size, stream);
    absl::StatusOr<Eigen::VectorXd> grad =
        StochasticGradient(objective, local, data, batch);
    if (!grad.ok()) return grad.status();
    local -= config.eta * *grad;
    const double norm = local.norm();
    if (!(norm <= config.divergence_ceiling)) {
      return absl::AbortedError(
          absl::StrCat("diverged: client ", data.client_id, " round ", round,
                       " step ", q, " |theta| = ", norm));
    }
  }
  return Eigen::VectorXd(local - theta);
}

absl::StatusOr<TauEstimate> EstimateTau(double loss_k, double loss_0,
                                        int64_t k) {
  if (!(loss_0 > 0.0) || !(loss_k > 0.0)) {
    return absl::InvalidArgumentError("objective values must be positive");
  }
  if (k < 1) return absl::InvalidArgumentError("k must be >= 1");
  TauEstimate est;
  est.tau = std::pow(loss_k / loss_0, 1.0 / static_cast<double>(k));
  if (!(est.tau <= 1.0)) {
    est.tau = 1.0;
    est.clamped = true;
  }
  if (!(est.tau > 0.0)) {
    est.tau = std::numeric_limits<double>::min();
    est.clamped = true;
  }
  return est;
}

absl::StatusOr<double> WeightedError(std::span<const double> grad_sq_norms,
                                     double tau) {
  if (grad_sq_norms.empty()) return absl::InvalidArgumentError("empty sequence");
  if (!(tau > 0.0) || tau > 1.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("tau must lie in (0, 1], got ", tau));
  }
  const auto last = static_cast<double>(grad_sq_norms.size() - 1);
  double num = 0.0;
  double den = 0.0;
  for (size_t k = 0; k < grad_sq_norms.size(); ++k) {
    const double w = std::pow(tau, last - static_cast<double>(k));
    num += w * grad_sq_norms[k];
    den += w;
  }
  return num / den;
}

absl::StatusOr<SynthProblem> SynthPartition(const prng::SeedMaterial& seed,
                                            const SynthConfig& config) {
  if (config.num_clients < 1 || config.dim < 1 ||
      config.samples_per_client < 1) {
    return absl::InvalidArgumentError(
        "num_clients, dim and samples_per_client must be positive");
  }
  if (!(config.noise_std >= 0.0) || !(config.heterogeneity >= 0.0)) {
    return absl::InvalidArgumentError(
        "noise_std and heterogeneity must be >= 0");
  }
  const int64_t d = config.dim;
  const int64_t n = config.samples_per_client;
  auto gaussian = [&](uint64_t client, uint64_t element) {
    return NormalQuantile(
        prng::DeriveUniformPair(seed, {.client_id = client,
                                       .element_index = element,
                                       .domain = StreamDomain::kDataSynthesis})
            .first);
  };
  auto uniform = [&](uint64_t client, uint64_t element) {
    return prng::DeriveUniformPair(seed, {.client_id = client,
                                          .element_index = element,
                                          .domain = StreamDomain::kDataSynthesis})
        .second;
  };

  SynthProblem problem;
  problem.planted.resize(d);
  for (int64_t j = 0; j < d; ++j) {
    problem.planted(j) = gaussian(kPlantedStream, static_cast<uint64_t>(j));
  }
  problem.clients.reserve(static_cast<size_t>(config.num_clients));
  for (int64_t i = 0; i < config.num_clients; ++i) {
    const auto client = static_cast<uint64_t>(i);
    LocalDataset data;
    data.client_id = i;
    data.features.resize(n, d);
    data.targets.resize(n);
    Eigen::VectorXd w = problem.planted;
    if (config.heterogeneity > 0.0) {
      for (int64_t j = 0; j < d; ++j) {
        w(j) += config.heterogeneity *
                gaussian(client, static_cast<uint64_t>(n * d + n + j));
      }
    }
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t j = 0; j < d; ++j) {
        data.features(r, j) = gaussian(client, static_cast<uint64_t>(r * d + j));
      }
      const double score = data.features.row(r).dot(w);
      const auto label_element = static_cast<uint64_t>(n * d + r);
      if (config.kind == ObjectiveKind::kLeastSquares) {
        data.targets(r) =
            score + config.noise_std * gaussian(client, label_element);
      } else {
        data.targets(r) = uniform(client, label_element) < Sigmoid(score) ? 1.0 : 0.0;
      }
    }
    problem.clients.push_back(std::move(data));
  }
  return problem;
}

}  // namespace gaulrq::training
