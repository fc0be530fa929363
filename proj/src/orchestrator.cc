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

#include "gaulrq/orchestrator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "gaulrq/gau_lrq.h"
#include "gaulrq/normal.h"

namespace gaulrq::sim {
namespace {

using prng::StreamDomain;

bool IsNoisy(AlgorithmKind kind) { return kind != AlgorithmKind::kLocalSgd; }

bool IsLrq(AlgorithmKind kind) {
  return kind == AlgorithmKind::kGauLrqSgd ||
         kind == AlgorithmKind::kDynamicGauLrqSgd;
}

double MaxAbs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::span<const double> AsSpan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

Eigen::VectorXd ToEigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

privacy::Participation ParticipationOf(const SimulationConfig& c) {
  return {.rounds = c.rounds,
          .clients_per_round = c.clients_per_round,
          .num_clients = c.num_clients};
}

int64_t RoundLimit(const SimulationConfig& c) {
  if (c.stop_rule == StopRule::kFixedRounds) return c.rounds;
  return c.max_rounds > 0 ? c.max_rounds : 2 * c.rounds;
}

}  // namespace

std::string_view RunStatusName(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kDiverged:
      return "diverged";
    case RunStatus::kBudgetExhausted:
      return "budget_exhausted";
  }
  return "unknown";
}

absl::Status ValidateSimulationConfig(const SimulationConfig& c) {
  std::vector<std::string> errors;
  if (c.num_clients < 1) errors.push_back("federation.num_clients: must be >= 1");
  if (c.clients_per_round < 1) {
    errors.push_back("federation.clients_per_round: must be >= 1");
  }
  if (c.clients_per_round > c.num_clients) {
    errors.push_back(absl::StrCat(
        "federation.clients_per_round, federation.num_clients: B (",
        c.clients_per_round, ") exceeds N (", c.num_clients, ")"));
  }
  if (c.local_steps < 1) errors.push_back("federation.local_steps: must be >= 1");
  if (c.rounds < 0) errors.push_back("federation.rounds: must be >= 0");
  if (c.batch_size < 1) errors.push_back("federation.batch_size: must be >= 1");
  if (!std::isfinite(c.eta) || !(c.eta > 0.0)) {
    errors.push_back("federation.eta: must be finite and > 0");
  }
  if (!std::isfinite(c.budget.epsilon) || !(c.budget.epsilon > 0.0)) {
    errors.push_back("privacy.epsilon: must be finite and > 0");
  }
  if (!(c.budget.delta > 0.0 && c.budget.delta < 1.0)) {
    errors.push_back("privacy.delta: must lie in (0, 1)");
  }
  if (!(c.tau > 0.0 && c.tau <= 1.0)) {
    errors.push_back("privacy.tau: must lie in (0, 1]");
  }
  if (!std::isfinite(c.clip.s2) || !(c.clip.s2 > 0.0)) {
    errors.push_back("privacy.clip.s2: must be finite and > 0");
  }
  if (c.max_rounds < 0) errors.push_back("privacy.max_rounds: must be >= 0");
  if (!(c.divergence_ceiling > 0.0)) {
    errors.push_back("divergence_ceiling: must be > 0");
  }
  if (!c.client_weights.empty()) {
    if (static_cast<int64_t>(c.client_weights.size()) != c.num_clients) {
      errors.push_back("federation.client_weights: length must equal N");
    } else {
      double sum = 0.0;
      double max_w = 0.0;
      bool negative = false;
      for (double w : c.client_weights) {
        negative |= !(w >= 0.0);
        sum += w;
        max_w = std::max(max_w, w);
      }
      if (negative || std::abs(sum - 1.0) > 1e-9) {
        errors.push_back(
            "federation.client_weights: must be nonnegative and sum to 1");
      } else if (static_cast<double>(c.clients_per_round) * max_w >
                 1.0 + 1e-12) {
        errors.push_back(
            "federation.client_weights: B * max weight exceeds 1");
      }
    }
  }
  if (errors.empty()) return absl::OkStatus();
  std::string joined;
  for (const std::string& e : errors) absl::StrAppend(&joined, e, "\n");
  joined.pop_back();
  return absl::InvalidArgumentError(joined);
}

absl::StatusOr<std::vector<int64_t>> SampleClients(
    int64_t num_clients, int64_t clients_per_round,
    std::span<const double> weights, prng::UniformStream& stream) {
  if (clients_per_round < 1 || clients_per_round > num_clients) {
    return absl::InvalidArgumentError(
        absl::StrCat("need 1 <= B <= N, got B = ", clients_per_round,
                     ", N = ", num_clients));
  }
  std::vector<int64_t> order(static_cast<size_t>(num_clients));
  std::iota(order.begin(), order.end(), int64_t{0});
  if (clients_per_round == num_clients) return order;

  std::vector<int64_t> chosen;
  if (weights.empty()) {
    for (int64_t i = 0; i < clients_per_round; ++i) {
      const auto pick = i + static_cast<int64_t>(stream.NextBelow(
                                static_cast<uint64_t>(num_clients - i)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(pick)]);
    }
    chosen.assign(order.begin(), order.begin() + clients_per_round);
  } else {
    if (static_cast<int64_t>(weights.size()) != num_clients) {
      return absl::InvalidArgumentError("weights length must equal N");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) return absl::InvalidArgumentError("negative weight");
      total += w;
    }
    const double max_w = *std::max_element(weights.begin(), weights.end());
    if (!(total > 0.0) ||
        static_cast<double>(clients_per_round) * max_w > total * (1.0 + 1e-12)) {
      return absl::InvalidArgumentError(
          "weights must be positive in total with B * max(p) <= 1");
    }
    for (int64_t i = num_clients - 1; i > 0; --i) {
      const auto pick =
          static_cast<int64_t>(stream.NextBelow(static_cast<uint64_t>(i + 1)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(pick)]);
    }
    const double start = stream.NextUniform();
    const double spacing = total / static_cast<double>(clients_per_round);
    double cumulative = 0.0;
    int64_t m = 0;
    for (int64_t id : order) {
      cumulative += weights[static_cast<size_t>(id)];
      if (m < clients_per_round &&
          (start + static_cast<double>(m)) * spacing < cumulative) {
        chosen.push_back(id);
        ++m;
      }
    }
    // Rounding in the running sum can leave the last point just past the end.
    for (auto it = order.rbegin(); m < clients_per_round && it != order.rend();
         ++it) {
      if (weights[static_cast<size_t>(*it)] > 0.0 &&
          std::find(chosen.begin(), chosen.end(), *it) == chosen.end()) {
        chosen.push_back(*it);
        ++m;
      }
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

absl::StatusOr<ClientUpload> EncodeClientUpdate(
    AlgorithmKind algorithm, const Eigen::VectorXd& update, double s2,
    double sigma, const prng::SeedMaterial& seed, uint32_t client_id,
    uint32_t round) {
  if (update.size() > std::numeric_limits<uint32_t>::max()) {
    return absl::InvalidArgumentError("update too large for the wire header");
  }
  const auto dim = static_cast<size_t>(update.size());
  wire::WireMessage message;
  message.header = {.client_id = client_id,
                    .round = round,
                    .dim = static_cast<uint32_t>(dim),
                    .bits_per_element = 32,
                    .algorithm = algorithm};
  ClientUpload upload;

  if (algorithm == AlgorithmKind::kLocalSgd) {
    upload.linf = MaxAbs(AsSpan(update));
    message.values.assign(update.begin(), update.end());
  } else {
    const std::vector<double> clipped = privacy::ClipUpdate(AsSpan(update), s2);
    upload.linf = MaxAbs(clipped);
    if (algorithm == AlgorithmKind::kGauSgd ||
        algorithm == AlgorithmKind::kQgSgd) {
      const std::vector<prng::UniformPair> draws = prng::ElementPairs(
          seed, StreamDomain::kGaussianNoise, client_id, round, dim);
      std::vector<double> noisy(clipped);
      for (size_t j = 0; j < dim; ++j) {
        noisy[j] += sigma * NormalQuantile(draws[j].first);
      }
      if (algorithm == AlgorithmKind::kGauSgd) {
        message.values.assign(noisy.begin(), noisy.end());
      } else {
        absl::StatusOr<int> bits = quant::SymmetricBitWidth(upload.linf, sigma);
        if (!bits.ok()) return bits.status();
        if (*bits > quant::kMaxBitsPerElement) {
          return absl::OutOfRangeError(
              absl::StrCat("QG-SGD needs ", *bits, " bits per element"));
        }
        const std::vector<prng::UniformPair> rounding = prng::ElementPairs(
            seed, StreamDomain::kStochasticRounding, client_id, round, dim);
        std::vector<double> u(dim);
        for (size_t j = 0; j < dim; ++j) u[j] = rounding[j].first;
        absl::StatusOr<quant::StochasticLevels> levels =
            quant::StochasticQuantizeLevels(noisy, *bits, u);
        if (!levels.ok()) return levels.status();
        const int64_t offset = int64_t{1} << (*bits - 1);
        message.indices.reserve(dim);
        for (int64_t level : levels->levels) {
          message.indices.push_back(level - offset);
        }
        message.scale = static_cast<float>(levels->scale);
        message.header.bits_per_element = static_cast<uint8_t>(*bits);
      }
    } else {
      const std::vector<prng::UniformPair> draws = prng::ElementPairs(
          seed, StreamDomain::kQuantizer, client_id, round, dim);
      absl::StatusOr<quant::EncodedVector> encoded = quant::LrqQuantizeVector(
          clipped, sigma, draws, {.client_id = client_id, .round = round});
      if (!encoded.ok()) return encoded.status();
      message.indices = std::move(encoded->indices);
      message.header.bits_per_element =
          static_cast<uint8_t>(encoded->bits_per_element);
      upload.clamp_count = encoded->clamp_count;
    }
  }
  upload.bits_per_element = message.header.bits_per_element;
  absl::StatusOr<std::vector<uint8_t>> bytes = wire::Serialize(message);
  if (!bytes.ok()) return bytes.status();
  upload.bytes = std::move(*bytes);
  return upload;
}

absl::StatusOr<Eigen::VectorXd> DecodeClientUpdate(
    std::span<const uint8_t> bytes, double sigma,
    const prng::SeedMaterial& seed) {
  absl::StatusOr<wire::WireMessage> message = wire::Parse(bytes);
  if (!message.ok()) return message.status();
  const wire::WireHeader& h = message->header;
  if (wire::CarriesFloats(h.algorithm)) {
    Eigen::VectorXd out(h.dim);
    for (uint32_t j = 0; j < h.dim; ++j) out(j) = message->values[j];
    return out;
  }
  if (h.algorithm == AlgorithmKind::kQgSgd) {
    quant::StochasticLevels levels;
    levels.bits = h.bits_per_element;
    levels.scale = message->scale;
    const int64_t offset = int64_t{1} << (h.bits_per_element - 1);
    levels.levels.reserve(h.dim);
    for (int64_t idx : message->indices) levels.levels.push_back(idx + offset);
    return ToEigen(quant::StochasticReconstruct(levels));
  }
  absl::StatusOr<quant::GauLrqCodec> codec = quant::GauLrqCodec::Create(sigma);
  if (!codec.ok()) return codec.status();
  quant::EncodedVector encoded;
  encoded.indices = std::move(message->indices);
  encoded.dim = h.dim;
  encoded.bits_per_element = h.bits_per_element;
  encoded.stream_tag = {.client_id = h.client_id, .round = h.round};
  const std::vector<prng::UniformPair> draws = prng::ElementPairs(
      seed, StreamDomain::kQuantizer, h.client_id, h.round, h.dim);
  absl::StatusOr<std::vector<double>> decoded =
      codec->Dequantize(encoded, draws);
  if (!decoded.ok()) return decoded.status();
  return ToEigen(*decoded);
}

absl::StatusOr<Eigen::VectorXd> AggregateAndStep(
    std::vector<DecodedUpdate> updates, const Eigen::VectorXd& theta) {
  if (updates.empty()) return absl::InvalidArgumentError("no updates");
  for (const DecodedUpdate& u : updates) {
    if (u.update.size() != theta.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("client ", u.client_id, " sent dimension ",
                       u.update.size(), ", model has ", theta.size()));
    }
  }
  std::sort(updates.begin(), updates.end(),
            [](const DecodedUpdate& a, const DecodedUpdate& b) {
              return a.client_id < b.client_id;
            });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (const DecodedUpdate& u : updates) sum += u.update;
  return Eigen::VectorXd(theta + sum / static_cast<double>(updates.size()));
}

ServerState InitialServerState(const Problem& problem,
                               const SimulationConfig& config) {
  ServerState state;
  state.theta = problem.theta0;
  state.initial_loss = problem.objective.GlobalLoss(problem.theta0, problem.clients);
  state.accountant = privacy::Accountant(config.clients_per_round,
                                         config.num_clients,
                                         config.budget.delta);
  return state;
}

absl::StatusOr<double> RoundSigma(const SimulationConfig& config, double s2,
                                  int64_t round) {
  if (config.algorithm == AlgorithmKind::kLocalSgd) return 0.0;
  const privacy::Participation p = ParticipationOf(config);
  if (config.algorithm != AlgorithmKind::kDynamicGauLrqSgd) {
    return privacy::SigmaFixed(s2, p, config.budget);
  }
  absl::StatusOr<privacy::SigmaSchedule> schedule =
      privacy::SigmaScheduleDynamic(s2, p, config.budget, config.tau);
  if (!schedule.ok()) return schedule.status();
  const auto k = static_cast<size_t>(std::min(round, config.rounds - 1));
  return schedule->sigmas[k];
}

absl::StatusOr<RoundRecord> RunRound(const SimulationConfig& config,
                                     const Problem& problem,
                                     const prng::SeedMaterial& seed,
                                     ServerState& state) {
  const int64_t k = state.round;
  if (k > std::numeric_limits<uint32_t>::max()) {
    return absl::OutOfRangeError("round index exceeds the wire header range");
  }
  RoundRecord record;
  record.round = k;
  record.loss = problem.objective.GlobalLoss(state.theta, problem.clients);
  record.grad_sq_norm =
      problem.objective.GlobalGradient(state.theta, problem.clients).squaredNorm();
  if (k >= 1) {
    absl::StatusOr<training::TauEstimate> est =
        training::EstimateTau(record.loss, state.initial_loss, k);
    if (est.ok()) {
      record.tau_estimate = est->tau;
      record.tau_clamped = est->clamped;
    }
  }

  prng::UniformStream sampler(
      seed, {.round = static_cast<uint64_t>(k),
             .domain = StreamDomain::kClientSampling});
  absl::StatusOr<std::vector<int64_t>> participants =
      SampleClients(config.num_clients, config.clients_per_round,
                    config.client_weights, sampler);
  if (!participants.ok()) return participants.status();
  record.participants = *participants;

  const training::LocalSgdConfig local{
      .local_steps = config.local_steps,
      .eta = config.eta,
      .batch_size = config.batch_size,
      .divergence_ceiling = config.divergence_ceiling};
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(record.participants.size());
  std::vector<double> norms;
  for (int64_t id : record.participants) {
    absl::StatusOr<Eigen::VectorXd> delta = training::LocalRounds(
        problem.objective, state.theta, problem.clients[static_cast<size_t>(id)],
        local, seed, static_cast<uint64_t>(k));
    if (!delta.ok()) return delta.status();
    norms.push_back(delta->norm());
    raw.push_back(std::move(*delta));
  }

  double s2 = 0.0;
  if (IsNoisy(config.algorithm)) {
    s2 = config.clip.s2;
    if (config.clip.mode == privacy::ClipMode::kMedianAdaptive) {
      absl::StatusOr<double> median = privacy::MedianClipBound(norms);
      if (!median.ok()) return median.status();
      if (*median > 0.0 && std::isfinite(*median)) s2 = *median;
    }
  }
  absl::StatusOr<double> sigma = RoundSigma(config, s2, k);
  if (!sigma.ok()) return sigma.status();
  record.sigma_used = *sigma;
  record.s2_used = s2;

  std::vector<DecodedUpdate> decoded;
  decoded.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const auto id = static_cast<uint32_t>(record.participants[i]);
    absl::StatusOr<ClientUpload> upload = EncodeClientUpdate(
        config.algorithm, raw[i], s2, *sigma, seed, id, static_cast<uint32_t>(k));
    if (!upload.ok()) return upload.status();
    record.bits_sent +=
        static_cast<int64_t>(raw[i].size()) * upload->bits_per_element;
    record.clamp_count += upload->clamp_count;
    record.client_linf.push_back(upload->linf);
    record.client_bits.push_back(upload->bits_per_element);
    absl::StatusOr<Eigen::VectorXd> update =
        DecodeClientUpdate(upload->bytes, *sigma, seed);
    if (!update.ok()) return update.status();
    decoded.push_back({.client_id = record.participants[i],
                       .update = std::move(*update)});
  }

  absl::StatusOr<Eigen::VectorXd> next =
      AggregateAndStep(std::move(decoded), state.theta);
  if (!next.ok()) return next.status();
  const double norm = next->norm();
  if (!(norm <= config.divergence_ceiling)) {
    return absl::AbortedError(
        absl::StrCat("diverged: global model norm ", norm, " after round ", k));
  }

  if (IsNoisy(config.algorithm)) {
    state.accountant.AddRound(s2, *sigma);
    record.epsilon_spent_cumulative = state.accountant.epsilon();
  } else {
    record.epsilon_spent_cumulative = std::numeric_limits<double>::infinity();
  }
  state.theta = std::move(*next);
  ++state.round;
  return record;
}

absl::StatusOr<RunTrace> RunSimulation(const SimulationConfig& config,
                                       const Problem& problem,
                                       const prng::SeedMaterial& seed) {
  if (absl::Status s = ValidateSimulationConfig(config); !s.ok()) return s;
  if (static_cast<int64_t>(problem.clients.size()) != config.num_clients) {
    return absl::InvalidArgumentError(
        absl::StrCat("federation.num_clients: config has ", config.num_clients,
                     " clients, problem has ", problem.clients.size()));
  }
  RunTrace trace;
  trace.algorithm = config.algorithm;
  ServerState state = InitialServerState(problem, config);
  trace.thetas.push_back(state.theta);
  RunSummary& summary = trace.summary;
  summary.initial_loss = state.initial_loss;
  summary.initial_grad_sq_norm =
      problem.objective.GlobalGradient(state.theta, problem.clients).squaredNorm();
  summary.epsilon_spent = IsNoisy(config.algorithm)
                              ? 0.0
                              : std::numeric_limits<double>::infinity();

  const int64_t limit = RoundLimit(config);
  for (int64_t k = 0; k < limit; ++k) {
    if (config.stop_rule == StopRule::kAccountant && IsNoisy(config.algorithm)) {
      // sigma is proportional to S2, so the spend ratio does not depend on
      // which clip bound the round ends up using.
      absl::StatusOr<double> sigma = RoundSigma(config, config.clip.s2, k);
      if (!sigma.ok()) return sigma.status();
      if (state.accountant.EpsilonIfAdded(config.clip.s2, *sigma) >
          config.budget.epsilon * (1.0 + 1e-9)) {
        summary.status = RunStatus::kBudgetExhausted;
        summary.message =
            absl::StrCat("stopped before round ", k, ": budget exhausted");
        break;
      }
    }
    absl::StatusOr<RoundRecord> record = RunRound(config, problem, seed, state);
    if (!record.ok()) {
      if (absl::IsAborted(record.status())) {
        summary.status = RunStatus::kDiverged;
        summary.message = std::string(record.status().message());
        break;
      }
      return record.status();
    }
    summary.total_bits += record->bits_sent;
    summary.total_clamps += record->clamp_count;
    if (IsLrq(config.algorithm)) {
      summary.total_quantized_elements +=
          static_cast<int64_t>(record->participants.size()) *
          problem.theta0.size();
    }
    summary.epsilon_spent = record->epsilon_spent_cumulative;
    trace.rounds.push_back(std::move(*record));
    trace.thetas.push_back(state.theta);
  }

  summary.rounds_completed = static_cast<int64_t>(trace.rounds.size());
  summary.final_loss = problem.objective.GlobalLoss(state.theta, problem.clients);
  summary.final_grad_sq_norm =
      problem.objective.GlobalGradient(state.theta, problem.clients).squaredNorm();
  if (!trace.rounds.empty()) {
    std::vector<double> g;
    g.reserve(trace.rounds.size());
    for (const RoundRecord& r : trace.rounds) g.push_back(r.grad_sq_norm);
    absl::StatusOr<double> e = training::WeightedError(g, config.tau);
    if (!e.ok()) return e.status();
    summary.weighted_error = *e;
  }
  return trace;
}

}  // namespace gaulrq::sim
