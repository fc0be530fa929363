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

// In-process simulation of the client/server system. Every client update is
// serialized to a WireMessage, parsed back on the server side and decoded
// with the shared pseudo-random streams, so the communication meter counts
// bits that were actually produced.

#ifndef GAULRQ_ORCHESTRATOR_H_
#define GAULRQ_ORCHESTRATOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/statusor.h"
#include "gaulrq/coupled_prng.h"
#include "gaulrq/privacy.h"
#include "gaulrq/training.h"
#include "gaulrq/wire_format.h"

namespace gaulrq::sim {

using wire::AlgorithmKind;

enum class StopRule {
  kFixedRounds,  // run exactly K rounds
  kAccountant,   // run until the next round would overspend epsilon
};

struct SimulationConfig {
  AlgorithmKind algorithm = AlgorithmKind::kGauLrqSgd;
  int64_t num_clients = 10;        // N
  int64_t clients_per_round = 10;  // B
  int64_t local_steps = 1;         // Q
  int64_t rounds = 10;             // K, also the budget-split horizon
  int64_t batch_size = 1;
  double eta = 0.1;
  privacy::PrivacyBudget budget;
  double tau = 1.0;  // schedule decay and weighted-error weight
  privacy::ClipConfig clip;
  StopRule stop_rule = StopRule::kFixedRounds;
  int64_t max_rounds = 0;  // accountant mode cap; 0 means 2 * K
  double divergence_ceiling = 1e8;
  std::vector<double> client_weights;  // empty means uniform 1/N
};

// Fails with field-path messages on inconsistent settings.
absl::Status ValidateSimulationConfig(const SimulationConfig& config);

struct Problem {
  training::Objective objective{training::ObjectiveKind::kLeastSquares, 0.0};
  std::vector<training::LocalDataset> clients;
  Eigen::VectorXd theta0;
};

struct RoundRecord {
  int64_t round = 0;
  std::vector<int64_t> participants;  // ascending
  int64_t bits_sent = 0;
  double sigma_used = 0.0;  // 0 for LocalSGD
  double s2_used = 0.0;     // 0 for LocalSGD
  double epsilon_spent_cumulative = 0.0;
  double loss = 0.0;          // F(theta_k), before this round's update
  double grad_sq_norm = 0.0;  // ||grad F(theta_k)||^2
  int64_t clamp_count = 0;
  std::vector<double> client_linf;  // ||clipped update||_inf per participant
  std::vector<int> client_bits;     // bits per element per participant
  std::optional<double> tau_estimate;
  bool tau_clamped = false;
};

enum class RunStatus { kCompleted, kDiverged, kBudgetExhausted };

std::string_view RunStatusName(RunStatus status);

struct RunSummary {
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  int64_t rounds_completed = 0;
  double initial_loss = 0.0;
  double initial_grad_sq_norm = 0.0;
  double final_loss = 0.0;
  double final_grad_sq_norm = 0.0;
  std::optional<double> weighted_error;  // absent when no round ran
  int64_t total_bits = 0;
  double epsilon_spent = 0.0;
  int64_t total_clamps = 0;
  int64_t total_quantized_elements = 0;
};

struct RunTrace {
  AlgorithmKind algorithm = AlgorithmKind::kLocalSgd;
  std::vector<RoundRecord> rounds;
  std::vector<Eigen::VectorXd> thetas;  // theta_0 .. theta_last
  RunSummary summary;
};

// B distinct client ids in ascending order. Uniform weights (empty span)
// draw a uniformly random subset; explicit weights use systematic
// probability-proportional-to-size sampling over a random ordering, which
// requires B * max(p) <= 1.
absl::StatusOr<std::vector<int64_t>> SampleClients(
    int64_t num_clients, int64_t clients_per_round,
    std::span<const double> weights, prng::UniformStream& stream);

// Client side of one round after local training: clip, privatize and
// quantize per algorithm, then serialize.
struct ClientUpload {
  std::vector<uint8_t> bytes;
  double linf = 0.0;  // of the clipped update (raw update for LocalSGD)
  int bits_per_element = 32;
  int64_t clamp_count = 0;
};

absl::StatusOr<ClientUpload> EncodeClientUpdate(
    AlgorithmKind algorithm, const Eigen::VectorXd& update, double s2,
    double sigma, const prng::SeedMaterial& seed, uint32_t client_id,
    uint32_t round);

// Server side: parse and decode. Gau-LRQ regenerates the layers from the
// shared quantizer stream addressed by the header's (client_id, round).
absl::StatusOr<Eigen::VectorXd> DecodeClientUpdate(
    std::span<const uint8_t> bytes, double sigma,
    const prng::SeedMaterial& seed);

struct DecodedUpdate {
  int64_t client_id = 0;
  Eigen::VectorXd update;
};

// theta + (1/B) sum of updates, summed in ascending client-id order.
absl::StatusOr<Eigen::VectorXd> AggregateAndStep(
    std::vector<DecodedUpdate> updates, const Eigen::VectorXd& theta);

// Mutable server state between rounds.
struct ServerState {
  Eigen::VectorXd theta;
  int64_t round = 0;
  double initial_loss = 0.0;
  privacy::Accountant accountant{1, 1, 0.5};
};

ServerState InitialServerState(const Problem& problem,
                               const SimulationConfig& config);

// Noise scale for `round` given this round's clip bound: the fixed sigma, or
// entry min(round, K-1) of the dynamic schedule. 0 for LocalSGD.
absl::StatusOr<double> RoundSigma(const SimulationConfig& config, double s2,
                                  int64_t round);

// Executes one round and advances `state`. Returns kAborted on divergence;
// `state` is left at the pre-round model in that case.
absl::StatusOr<RoundRecord> RunRound(const SimulationConfig& config,
                                     const Problem& problem,
                                     const prng::SeedMaterial& seed,
                                     ServerState& state);

// Full run. Divergence and budget exhaustion end the run early and are
// reported in the summary; only invalid configurations are errors.
absl::StatusOr<RunTrace> RunSimulation(const SimulationConfig& config,
                                       const Problem& problem,
                                       const prng::SeedMaterial& seed);

}  // namespace gaulrq::sim

#endif  // GAULRQ_ORCHESTRATOR_H_
