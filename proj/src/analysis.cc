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

#include "gaulrq/analysis.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "gaulrq/gau_lrq.h"
#include "gaulrq/normal.h"

namespace gaulrq::analysis {
namespace {

constexpr int64_t kMinKsSamples = 100;

double AsDouble(int64_t v) { return static_cast<double>(v); }

double LogInvDelta(const BoundInputs& in) { return std::log(1.0 / in.delta); }

// eta^2 Q N^2 eps^2, the shared denominator of every privacy-type term.
double NoiseDenominator(const BoundInputs& in) {
  const double n = AsDouble(in.num_clients);
  return in.eta * in.eta * AsDouble(in.local_steps) * n * n * in.epsilon *
         in.epsilon;
}

// sum_{k<K} tau^-k.
double GeometricWeightSum(double tau, int64_t rounds) {
  double sum = 0.0;
  for (int64_t k = 0; k < rounds; ++k) sum += std::pow(tau, -AsDouble(k));
  return sum;
}

absl::StatusOr<Bound> Finish(const BoundInputs& in, double value) {
  if (absl::Status s = ValidateBoundInputs(in); !s.ok()) return s;
  return Bound{.value = value, .step_size_violated = !StepSizeConditionHolds(in)};
}

absl::StatusOr<NoiseReport> Summarize(std::vector<double> noise, double target_sd,
                                      const std::function<double(double)>& cdf,
                                      double variance_target) {
  NoiseReport report;
  const auto n = static_cast<double>(noise.size());
  double sum = 0.0;
  for (double e : noise) sum += e;
  report.sample_mean = sum / n;
  double sq = 0.0;
  for (double e : noise) sq += (e - report.sample_mean) * (e - report.sample_mean);
  report.sample_variance = sq / (n - 1.0);
  absl::StatusOr<KsResult> ks = KsStatistic(noise, cdf);
  if (!ks.ok()) return ks.status();
  report.ks = *ks;

  const double mean_tol = 5.0 * target_sd / std::sqrt(n);
  report.checks.push_back({.name = "mean",
                           .value = std::abs(report.sample_mean),
                           .threshold = mean_tol,
                           .passed = std::abs(report.sample_mean) <= mean_tol});
  const double rel = std::abs(report.sample_variance / variance_target - 1.0);
  report.checks.push_back({.name = "variance_rel_error",
                           .value = rel,
                           .threshold = 0.01,
                           .passed = rel <= 0.01});
  report.checks.push_back({.name = "ks_statistic",
                           .value = report.ks.statistic,
                           .threshold = report.ks.critical_value,
                           .passed = !report.ks.reject});
  return report;
}

}  // namespace

absl::Status ValidateBoundInputs(const BoundInputs& in) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(std::isfinite(in.initial_gap) && in.initial_gap >= 0.0)) {
    return absl::InvalidArgumentError("initial_gap must be finite and >= 0");
  }
  if (!positive(in.eta)) return absl::InvalidArgumentError("eta must be > 0");
  if (in.local_steps < 1 || in.rounds < 1 || in.clients_per_round < 1 ||
      in.num_clients < 1 || in.dim < 1) {
    return absl::InvalidArgumentError("Q, K, B, N and d must be positive");
  }
  if (in.clients_per_round > in.num_clients) {
    return absl::InvalidArgumentError("B exceeds N");
  }
  if (!(std::isfinite(in.alpha_sq) && in.alpha_sq >= 0.0)) {
    return absl::InvalidArgumentError("alpha_sq must be finite and >= 0");
  }
  if (!positive(in.smoothness)) {
    return absl::InvalidArgumentError("smoothness must be > 0");
  }
  if (!positive(in.s2)) return absl::InvalidArgumentError("s2 must be > 0");
  if (!positive(in.epsilon)) {
    return absl::InvalidArgumentError("epsilon must be > 0");
  }
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (!(in.tau > 0.0 && in.tau <= 1.0)) {
    return absl::InvalidArgumentError("tau must lie in (0, 1]");
  }
  if (!positive(in.linf)) return absl::InvalidArgumentError("linf must be > 0");
  return absl::OkStatus();
}

bool StepSizeConditionHolds(const BoundInputs& in) {
  const double q = AsDouble(in.local_steps);
  const double en = in.eta * in.smoothness;
  return en <= 1.0 && en * q + en * en * q * (q - 1.0) / 2.0 <= 1.0;
}

double LsgdError(const BoundInputs& in) {
  const double q = AsDouble(in.local_steps);
  return 2.0 * in.initial_gap /
             (q * in.eta * GeometricWeightSum(in.tau, in.rounds)) +
         (q * in.alpha_sq / AsDouble(in.clients_per_round)) *
             ((2.0 * q - 1.0) * (q - 1.0) / (6.0 * q) + 1.0);
}

double PrivacyError(const BoundInputs& in) {
  return 4.0 * AsDouble(in.dim) * in.s2 * in.s2 * AsDouble(in.rounds) *
         LogInvDelta(in) / NoiseDenominator(in);
}

double QgQuantizationError(const BoundInputs& in) {
  return 8.0 * std::numbers::ln2 * AsDouble(in.dim) * in.s2 * in.s2 *
         AsDouble(in.rounds) * LogInvDelta(in) / NoiseDenominator(in);
}

double QgCouplingError(const BoundInputs& in) {
  const double n = AsDouble(in.num_clients);
  const double k = AsDouble(in.rounds);
  const double s2sq = in.s2 * in.s2;
  const double ln = LogInvDelta(in);
  const double eps2 = in.epsilon * in.epsilon;
  return 32.0 * std::numbers::ln2 * AsDouble(in.dim) * s2sq * s2sq * k * k *
         AsDouble(in.clients_per_round) * ln * ln /
         (n * n * n * n * eps2 * eps2 * in.linf * in.linf * in.eta * in.eta *
          AsDouble(in.local_steps));
}

double BqPrivacyError(const BoundInputs& in) {
  const double d = AsDouble(in.dim);
  return 20.0 * d * d * in.s2 * in.s2 * AsDouble(in.rounds) /
         (NoiseDenominator(in) * in.delta * in.delta);
}

double BqQuantizationError(const BoundInputs& in) {
  return 2.0 * std::numbers::ln2 * AsDouble(in.dim) * in.s2 * in.s2 *
         AsDouble(in.rounds) * LogInvDelta(in) / NoiseDenominator(in);
}

absl::StatusOr<Bound> BoundLsgd(const BoundInputs& in) {
  return Finish(in, LsgdError(in));
}

absl::StatusOr<Bound> BoundGauLrq(const BoundInputs& in) {
  return Finish(in, LsgdError(in) + PrivacyError(in));
}

absl::StatusOr<Bound> BoundDynamic(const BoundInputs& in) {
  if (absl::Status s = ValidateBoundInputs(in); !s.ok()) return s;
  absl::StatusOr<double> factor = AmQmFactor(in.tau, in.rounds);
  if (!factor.ok()) return factor.status();
  return Finish(in, LsgdError(in) + PrivacyError(in) * *factor);
}

absl::StatusOr<Bound> BoundQg(const BoundInputs& in) {
  return Finish(in, LsgdError(in) + PrivacyError(in) + QgQuantizationError(in) +
                        QgCouplingError(in));
}

absl::StatusOr<Bound> BoundBq(const BoundInputs& in) {
  return Finish(in,
                LsgdError(in) + BqPrivacyError(in) + BqQuantizationError(in));
}

absl::StatusOr<double> AmQmFactor(double tau, int64_t rounds) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    return absl::InvalidArgumentError("tau must lie in (0, 1]");
  }
  if (rounds < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (tau == 1.0 || rounds == 1) return 1.0;
  // Terms are scaled by tau^((K-1)/2) so the largest is 1; the ratio is
  // scale-free.
  const double top = AsDouble(rounds - 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int64_t k = 0; k < rounds; ++k) {
    const double t = std::pow(tau, 0.5 * (top - AsDouble(k)));
    sum += t;
    sum_sq += t * t;
  }
  return sum * sum / (AsDouble(rounds) * sum_sq);
}

absl::StatusOr<int64_t> CommCost(
    std::span<const std::vector<double>> linf_per_round,
    std::span<const double> sigmas, int64_t dim) {
  if (linf_per_round.size() != sigmas.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("mismatched lengths: ", linf_per_round.size(),
                     " rounds of norms, ", sigmas.size(), " sigmas"));
  }
  if (dim < 1) return absl::InvalidArgumentError("dim must be >= 1");
  int64_t total = 0;
  for (size_t k = 0; k < sigmas.size(); ++k) {
    for (double linf : linf_per_round[k]) {
      absl::StatusOr<int> bits = quant::SymmetricBitWidth(linf, sigmas[k]);
      if (!bits.ok()) return bits.status();
      total += dim * *bits;
    }
  }
  return total;
}

absl::StatusOr<int64_t> CommCostFromInputs(
    const BoundInputs& in, std::span<const std::vector<double>> linf_per_round,
    privacy::ScheduleKind kind) {
  const privacy::Participation p{.rounds = in.rounds,
                                 .clients_per_round = in.clients_per_round,
                                 .num_clients = in.num_clients};
  const privacy::PrivacyBudget budget{.epsilon = in.epsilon, .delta = in.delta};
  absl::StatusOr<privacy::SigmaSchedule> schedule =
      kind == privacy::ScheduleKind::kFixed
          ? privacy::FixedSchedule(in.s2, p, budget)
          : privacy::SigmaScheduleDynamic(in.s2, p, budget, in.tau);
  if (!schedule.ok()) return schedule.status();
  return CommCost(linf_per_round, schedule->sigmas, in.dim);
}

absl::StatusOr<KsResult> KsStatistic(std::span<const double> samples,
                                     const std::function<double(double)>& cdf) {
  if (static_cast<int64_t>(samples.size()) < kMinKsSamples) {
    return absl::InvalidArgumentError(
        absl::StrCat("KS test needs at least ", kMinKsSamples, " samples, got ",
                     samples.size()));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  KsResult result;
  result.statistic = d;
  result.critical_value = 1.63 / std::sqrt(n);
  result.reject = d > result.critical_value;
  return result;
}

bool NoiseReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const NoiseCheck& c) { return c.passed; });
}

absl::StatusOr<NoiseReport> GaussianNoiseSuite(double sigma, int64_t n,
                                               const prng::SeedMaterial& seed,
                                               double u) {
  if (n < kMinKsSamples) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least ", kMinKsSamples, " round trips"));
  }
  absl::StatusOr<quant::GauLrqCodec> codec = quant::GauLrqCodec::Create(sigma);
  if (!codec.ok()) return codec.status();
  std::vector<double> noise;
  noise.reserve(static_cast<size_t>(n));
  for (int64_t t = 0; t < n; ++t) {
    const prng::UniformPair pair = prng::DeriveUniformPair(
        seed, {.element_index = static_cast<uint64_t>(t)});
    absl::StatusOr<quant::LayerSample> layer = codec->Sample(pair);
    if (!layer.ok()) return layer.status();
    absl::StatusOr<int64_t> m = quant::LrqEncode(u, *layer);
    if (!m.ok()) return m.status();
    absl::StatusOr<double> decoded = quant::LrqDecode(*m, *layer);
    if (!decoded.ok()) return decoded.status();
    noise.push_back(*decoded - u);
  }
  return Summarize(
      std::move(noise), sigma, [sigma](double e) { return NormalCdf(e / sigma); },
      sigma * sigma);
}

absl::StatusOr<NoiseReport> DitheredNoiseSuite(double q_step, int64_t n,
                                               const prng::SeedMaterial& seed,
                                               double u) {
  if (n < kMinKsSamples) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least ", kMinKsSamples, " round trips"));
  }
  absl::StatusOr<quant::DitheredCodec> codec =
      quant::DitheredCodec::Create(q_step);
  if (!codec.ok()) return codec.status();
  std::vector<double> noise;
  noise.reserve(static_cast<size_t>(n));
  for (int64_t t = 0; t < n; ++t) {
    const prng::UniformPair pair = prng::DeriveUniformPair(
        seed, {.element_index = static_cast<uint64_t>(t)});
    const double dither = codec->DitherFromUniform(pair.first);
    noise.push_back(codec->Decode(codec->Encode(u, dither), dither) - u);
  }
  const double half = q_step / 2.0;
  return Summarize(
      std::move(noise), q_step / std::sqrt(12.0),
      [half](double e) { return std::clamp((e + half) / (2.0 * half), 0.0, 1.0); },
      q_step * q_step / 12.0);
}

absl::StatusOr<BoundReport> CompareBounds(const BoundInputs& in) {
  BoundReport r;
  r.inputs = in;
  absl::StatusOr<Bound> lsgd = BoundLsgd(in);
  if (!lsgd.ok()) return lsgd.status();
  absl::StatusOr<Bound> fixed = BoundGauLrq(in);
  if (!fixed.ok()) return fixed.status();
  absl::StatusOr<Bound> dynamic = BoundDynamic(in);
  if (!dynamic.ok()) return dynamic.status();
  absl::StatusOr<Bound> qg = BoundQg(in);
  if (!qg.ok()) return qg.status();
  absl::StatusOr<Bound> bq = BoundBq(in);
  if (!bq.ok()) return bq.status();
  absl::StatusOr<double> factor = AmQmFactor(in.tau, in.rounds);
  if (!factor.ok()) return factor.status();
  r.lsgd = lsgd->value;
  r.gau_lrq = fixed->value;
  r.dynamic = dynamic->value;
  r.qg = qg->value;
  r.bq = bq->value;
  r.am_qm = *factor;
  r.step_size_ok = !lsgd->step_size_violated;
  r.dynamic_le_fixed = r.dynamic <= r.gau_lrq;
  r.fixed_le_qg = r.gau_lrq <= r.qg;
  r.fixed_le_bq = r.gau_lrq <= r.bq;
  return r;
}

}  // namespace gaulrq::analysis
