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

#include "gaulrq/privacy.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>

#include "absl/strings/str_cat.h"

namespace gaulrq::privacy {
namespace {

absl::Status CheckClip(double s2) {
  if (!std::isfinite(s2) || !(s2 > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("s2 must be finite and positive, got ", s2));
  }
  return absl::OkStatus();
}

absl::Status CheckTau(double tau) {
  if (!std::isfinite(tau) || !(tau > 0.0) || tau > 1.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("tau must lie in (0, 1], got ", tau));
  }
  return absl::OkStatus();
}

// 2 S2 sqrt(B ln(1/delta)) / (N eps): the noise scale of a single-round budget.
double SingleRoundScale(double s2, const Participation& p,
                        const PrivacyBudget& budget) {
  return 2.0 * s2 *
         std::sqrt(static_cast<double>(p.clients_per_round) *
                   std::log(1.0 / budget.delta)) /
         (static_cast<double>(p.num_clients) * budget.epsilon);
}

// sum_{i<K} tau^(-i/2).
double HalfPowerSum(int64_t rounds, double tau) {
  double sum = 0.0;
  for (int64_t i = 0; i < rounds; ++i) {
    sum += std::pow(tau, -0.5 * static_cast<double>(i));
  }
  return sum;
}

// log of HalfPowerSum, factoring out the largest term so long schedules with
// small tau neither overflow nor underflow.
double LogHalfPowerSum(int64_t rounds, double tau) {
  const double log_tau = std::log(tau);
  const double top = static_cast<double>(rounds - 1);
  double rest = 0.0;
  for (int64_t i = 0; i < rounds; ++i) {
    rest += std::exp(0.5 * (top - static_cast<double>(i)) * log_tau);
  }
  return -0.5 * top * log_tau + std::log(rest);
}

}  // namespace

absl::Status ValidateBudget(const PrivacyBudget& budget) {
  if (!std::isfinite(budget.epsilon) || !(budget.epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and positive, got ",
                     budget.epsilon));
  }
  if (!(budget.delta > 0.0) || !(budget.delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", budget.delta));
  }
  return absl::OkStatus();
}

absl::Status ValidateParticipation(const Participation& p) {
  if (p.rounds < 1 || p.clients_per_round < 1 || p.num_clients < 1) {
    return absl::InvalidArgumentError("K, B and N must be positive");
  }
  if (p.clients_per_round > p.num_clients) {
    return absl::InvalidArgumentError(
        absl::StrCat("B (", p.clients_per_round, ") exceeds N (",
                     p.num_clients, ")"));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> SigmaFixed(double s2, const Participation& p,
                                  const PrivacyBudget& budget) {
  if (absl::Status s = CheckClip(s2); !s.ok()) return s;
  if (absl::Status s = ValidateParticipation(p); !s.ok()) return s;
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;
  return SingleRoundScale(s2, p, budget) *
         std::sqrt(static_cast<double>(p.rounds));
}

absl::StatusOr<SigmaSchedule> FixedSchedule(double s2, const Participation& p,
                                            const PrivacyBudget& budget) {
  absl::StatusOr<double> sigma = SigmaFixed(s2, p, budget);
  if (!sigma.ok()) return sigma.status();
  SigmaSchedule schedule;
  schedule.kind = ScheduleKind::kFixed;
  schedule.sigmas.assign(static_cast<size_t>(p.rounds), *sigma);
  return schedule;
}

absl::StatusOr<SigmaSchedule> SigmaScheduleDynamic(double s2,
                                                   const Participation& p,
                                                   const PrivacyBudget& budget,
                                                   double tau) {
  if (absl::Status s = CheckTau(tau); !s.ok()) return s;
  if (absl::Status s = CheckClip(s2); !s.ok()) return s;
  if (absl::Status s = ValidateParticipation(p); !s.ok()) return s;
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;

  const double scale = SingleRoundScale(s2, p, budget);
  const double sum = HalfPowerSum(p.rounds, tau);
  SigmaSchedule schedule;
  schedule.kind = ScheduleKind::kDynamic;
  schedule.tau = tau;
  schedule.sigmas.reserve(static_cast<size_t>(p.rounds));
  std::optional<double> log_sum;
  for (int64_t k = 0; k < p.rounds; ++k) {
    const double decay = std::pow(tau, 0.5 * static_cast<double>(k));
    const double product = sum * decay;
    if (std::isfinite(product) && product > 0.0) {
      schedule.sigmas.push_back(scale * std::sqrt(product));
    } else {
      if (!log_sum) log_sum = LogHalfPowerSum(p.rounds, tau);
      const double log_product = *log_sum +
                                 0.5 * static_cast<double>(k) * std::log(tau);
      schedule.sigmas.push_back(scale * std::exp(0.5 * log_product));
    }
  }
  return schedule;
}

absl::StatusOr<double> EpsilonFromSigmas(double s2, int64_t clients_per_round,
                                         int64_t num_clients, double delta,
                                         std::span<const double> sigmas) {
  if (sigmas.empty()) return absl::InvalidArgumentError("empty schedule");
  if (absl::Status s = CheckClip(s2); !s.ok()) return s;
  if (absl::Status s = ValidateParticipation(
          {.rounds = static_cast<int64_t>(sigmas.size()),
           .clients_per_round = clients_per_round,
           .num_clients = num_clients});
      !s.ok()) {
    return s;
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  double sum = 0.0;
  for (double sigma : sigmas) {
    if (!std::isfinite(sigma) || !(sigma > 0.0)) {
      return absl::InvalidArgumentError("schedule entries must be positive");
    }
    sum += 1.0 / (sigma * sigma);
  }
  return 2.0 * s2 *
         std::sqrt(static_cast<double>(clients_per_round) *
                   std::log(1.0 / delta)) /
         static_cast<double>(num_clients) * std::sqrt(sum);
}

absl::StatusOr<double> PerRoundEpsilon(int64_t k, int64_t rounds, double tau,
                                       const PrivacyBudget& budget) {
  if (absl::Status s = CheckTau(tau); !s.ok()) return s;
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;
  if (rounds < 1 || k < 0 || k >= rounds) {
    return absl::OutOfRangeError(
        absl::StrCat("round ", k, " outside [0, ", rounds, ")"));
  }
  return budget.epsilon * std::sqrt(1.0 / HalfPowerSum(rounds, tau)) *
         std::pow(tau, -0.25 * static_cast<double>(k));
}

std::vector<double> ClipUpdate(std::span<const double> update, double s2) {
  assert(s2 > 0.0);
  double sq = 0.0;
  for (double v : update) sq += v * v;
  const double factor = std::max(1.0, std::sqrt(sq) / s2);
  std::vector<double> out(update.begin(), update.end());
  if (factor > 1.0) {
    for (double& v : out) v /= factor;
  }
  return out;
}

absl::StatusOr<double> MedianClipBound(std::span<const double> norms) {
  if (norms.empty()) return absl::InvalidArgumentError("no norms to median");
  std::vector<double> sorted(norms.begin(), norms.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(
                                        (sorted.size() - 1) / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  return *mid;
}

Accountant::Accountant(int64_t clients_per_round, int64_t num_clients,
                       double delta)
    : scale_(2.0 *
             std::sqrt(static_cast<double>(clients_per_round) *
                       std::log(1.0 / delta)) /
             static_cast<double>(num_clients)) {}

double Accountant::EpsilonIfAdded(double s2, double sigma) const {
  const double ratio = s2 / sigma;
  return EpsilonFor(sum_ratio_sq_ + ratio * ratio);
}

void Accountant::AddRound(double s2, double sigma) {
  const double ratio = s2 / sigma;
  sum_ratio_sq_ += ratio * ratio;
  ++rounds_;
}

double Accountant::epsilon() const { return EpsilonFor(sum_ratio_sq_); }

double Accountant::EpsilonFor(double sum) const {
  return scale_ * std::sqrt(sum);
}

}  // namespace gaulrq::privacy
