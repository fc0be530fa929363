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

// Client-level DP accounting for Gaussian-noise local SGD: the fixed noise
// scale, the dynamic per-round schedule that minimizes the tau-weighted
// privacy error under a total (epsilon, delta) budget, and update clipping.

#ifndef GAULRQ_PRIVACY_H_
#define GAULRQ_PRIVACY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace gaulrq::privacy {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;
};

absl::Status ValidateBudget(const PrivacyBudget& budget);

// Participation shape shared by every formula here.
struct Participation {
  int64_t rounds = 1;             // K
  int64_t clients_per_round = 1;  // B
  int64_t num_clients = 1;        // N
};

absl::Status ValidateParticipation(const Participation& p);

enum class ScheduleKind { kFixed, kDynamic };

struct SigmaSchedule {
  ScheduleKind kind = ScheduleKind::kFixed;
  std::vector<double> sigmas;
  double tau = 1.0;
};

enum class ClipMode { kFixed, kMedianAdaptive };

struct ClipConfig {
  double s2 = 1.0;
  ClipMode mode = ClipMode::kFixed;
};

// sigma = 2 S2 sqrt(K B ln(1/delta)) / (N epsilon).
absl::StatusOr<double> SigmaFixed(double s2, const Participation& p,
                                  const PrivacyBudget& budget);

// K copies of SigmaFixed.
absl::StatusOr<SigmaSchedule> FixedSchedule(double s2, const Participation& p,
                                            const PrivacyBudget& budget);

// sigma_k^2 = (4 S2^2 B ln(1/delta) / (N^2 eps^2))
//             * (sum_{i<K} tau^(-i/2)) * tau^(k/2).
// At tau = 1 every entry is bitwise equal to SigmaFixed.
absl::StatusOr<SigmaSchedule> SigmaScheduleDynamic(double s2,
                                                   const Participation& p,
                                                   const PrivacyBudget& budget,
                                                   double tau);

// eps' = (2 S2 sqrt(B ln(1/delta)) / N) * sqrt(sum_k 1 / sigma_k^2).
absl::StatusOr<double> EpsilonFromSigmas(double s2, int64_t clients_per_round,
                                         int64_t num_clients, double delta,
                                         std::span<const double> sigmas);

// eps_k = eps * sqrt(1 / sum_{i<K} tau^(-i/2)) * tau^(-k/4).
absl::StatusOr<double> PerRoundEpsilon(int64_t k, int64_t rounds, double tau,
                                       const PrivacyBudget& budget);

// Delta / max{1, ||Delta||_2 / s2}. Requires s2 > 0.
std::vector<double> ClipUpdate(std::span<const double> update, double s2);

// Lower median (the smaller middle element for even counts).
absl::StatusOr<double> MedianClipBound(std::span<const double> norms);

// Running moment-accountant total for rounds whose clip bound may change
// (median-adaptive clipping): eps = (2 sqrt(B ln(1/delta)) / N)
// * sqrt(sum_k (S2_k / sigma_k)^2).
class Accountant {
 public:
  Accountant(int64_t clients_per_round, int64_t num_clients, double delta);

  // Spend if a round with (s2, sigma) were added, without adding it.
  double EpsilonIfAdded(double s2, double sigma) const;
  void AddRound(double s2, double sigma);
  double epsilon() const;
  int64_t rounds() const { return rounds_; }

 private:
  double EpsilonFor(double sum) const;

  double scale_;
  double sum_ratio_sq_ = 0.0;
  int64_t rounds_ = 0;
};

}  // namespace gaulrq::privacy

#endif  // GAULRQ_PRIVACY_H_
