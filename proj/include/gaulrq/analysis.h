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

// Closed-form convergence-bound and communication-cost evaluators, and the
// statistical checks used to verify the quantizers' noise laws.

#ifndef GAULRQ_ANALYSIS_H_
#define GAULRQ_ANALYSIS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "gaulrq/coupled_prng.h"
#include "gaulrq/privacy.h"

namespace gaulrq::analysis {

struct BoundInputs {
  double initial_gap = 1.0;  // F(theta_0) - F(theta*)
  double eta = 0.01;
  int64_t local_steps = 1;        // Q
  int64_t rounds = 1;             // K
  int64_t clients_per_round = 1;  // B
  int64_t num_clients = 1;        // N
  int64_t dim = 1;                // d
  double alpha_sq = 0.0;
  double smoothness = 1.0;  // nu
  double s2 = 1.0;
  double epsilon = 1.0;
  double delta = 1e-5;
  double tau = 1.0;
  double linf = 1.0;  // representative ||clipped update||_inf
};

absl::Status ValidateBoundInputs(const BoundInputs& in);

// eta <= 1/nu and eta nu Q + nu^2 eta^2 Q (Q - 1) / 2 <= 1.
bool StepSizeConditionHolds(const BoundInputs& in);

// A bound value plus whether the inputs violate the step-size condition the
// bound was derived under. The value is computed either way.
struct Bound {
  double value = 0.0;
  bool step_size_violated = false;
};

// Individual terms, exposed for reports and tests.
double LsgdError(const BoundInputs& in);
double PrivacyError(const BoundInputs& in);
double QgQuantizationError(const BoundInputs& in);
double QgCouplingError(const BoundInputs& in);
double BqPrivacyError(const BoundInputs& in);
double BqQuantizationError(const BoundInputs& in);

// 2 F_gap / (Q eta sum_k tau^-k) + (Q alpha^2 / B) [(2Q-1)(Q-1)/(6Q) + 1].
absl::StatusOr<Bound> BoundLsgd(const BoundInputs& in);
// E_LSGD + 4 d S2^2 K ln(1/delta) / (eta^2 Q N^2 eps^2).
absl::StatusOr<Bound> BoundGauLrq(const BoundInputs& in);
// E_LSGD + privacy error * AmQmFactor(tau, K).
absl::StatusOr<Bound> BoundDynamic(const BoundInputs& in);
// Gau-LRQ bound plus quantization and coupling errors.
absl::StatusOr<Bound> BoundQg(const BoundInputs& in);
// E_LSGD + 20 d^2 S2^2 K / (eta^2 Q N^2 eps^2 delta^2)
//        + 2 ln2 d S2^2 K ln(1/delta) / (eta^2 Q N^2 eps^2).
absl::StatusOr<Bound> BoundBq(const BoundInputs& in);

// AM_K^2(tau^(-k/2)) / QM_K^2(tau^(-k/2)), in (0, 1].
absl::StatusOr<double> AmQmFactor(double tau, int64_t rounds);

// Total payload bits: sum over rounds k and participating clients of
// d * SymmetricBitWidth(linf[k][i], sigmas[k]).
absl::StatusOr<int64_t> CommCost(
    std::span<const std::vector<double>> linf_per_round,
    std::span<const double> sigmas, int64_t dim);

// Same, with the per-round sigmas derived from `in` (fixed or dynamic).
absl::StatusOr<int64_t> CommCostFromInputs(
    const BoundInputs& in, std::span<const std::vector<double>> linf_per_round,
    privacy::ScheduleKind kind);

struct KsResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
};

// One-sample Kolmogorov-Smirnov test at significance 0.01 using the
// asymptotic critical value 1.63 / sqrt(n). Needs at least 100 samples.
absl::StatusOr<KsResult> KsStatistic(std::span<const double> samples,
                                     const std::function<double(double)>& cdf);

struct NoiseCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct NoiseReport {
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  KsResult ks;
  std::vector<NoiseCheck> checks;
  bool passed() const;
};

// Gau-LRQ round trips of the fixed input `u` through fresh layers drawn from
// the quantizer stream of `seed`. Checks |mean| <= 5 sigma / sqrt(n),
// |var / sigma^2 - 1| <= 0.01 and a Gaussian KS test.
absl::StatusOr<NoiseReport> GaussianNoiseSuite(double sigma, int64_t n,
                                               const prng::SeedMaterial& seed,
                                               double u = 0.37);

// Dithered-quantizer round trips; KS test against U(-q/2, q/2) plus the
// same mean and (q^2 / 12) variance checks.
absl::StatusOr<NoiseReport> DitheredNoiseSuite(double q_step, int64_t n,
                                               const prng::SeedMaterial& seed,
                                               double u = 0.37);

// All five bounds for one input set, plus the factor and step-size check.
struct BoundReport {
  BoundInputs inputs;
  double lsgd = 0.0;
  double gau_lrq = 0.0;
  double dynamic = 0.0;
  double qg = 0.0;
  double bq = 0.0;
  double am_qm = 1.0;
  bool step_size_ok = true;
  bool dynamic_le_fixed = true;  // dynamic <= gau_lrq
  bool fixed_le_qg = true;       // gau_lrq <= qg
  bool fixed_le_bq = true;       // gau_lrq <= bq
};

absl::StatusOr<BoundReport> CompareBounds(const BoundInputs& in);

}  // namespace gaulrq::analysis

#endif  // GAULRQ_ANALYSIS_H_
