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

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/string_view.h"
#include "gaulrq/normal.h"
#include "json.hpp"

namespace gaulrq::config {
namespace {

using Json = nlohmann::json;

// Walks one JSON object, recording type errors and unknown keys by path.
class ObjectReader {
 public:
  ObjectReader(const Json& node, std::string path,
               std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {}

  bool ok() const { return node_.is_object(); }

  std::string Path(absl::string_view key) const {
    return path_.empty() ? std::string(key) : absl::StrCat(path_, ".", key);
  }

  const Json* Find(absl::string_view key) {
    known_.insert(std::string(key));
    auto it = node_.find(std::string(key));
    return it == node_.end() ? nullptr : &*it;
  }

  void Int(absl::string_view key, int64_t& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if (v->is_number_integer()) {
      out = v->get<int64_t>();
    } else if (v->is_number_float() && std::floor(v->get<double>()) ==
                                           v->get<double>() &&
               std::abs(v->get<double>()) < 9e15) {
      out = static_cast<int64_t>(v->get<double>());
    } else {
      errors_.push_back(absl::StrCat(Path(key), ": expected an integer"));
    }
  }

  void Uint(absl::string_view key, uint64_t& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if (v->is_number_unsigned()) {
      out = v->get<uint64_t>();
    } else {
      errors_.push_back(
          absl::StrCat(Path(key), ": expected a nonnegative integer"));
    }
  }

  void Double(absl::string_view key, double& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if (v->is_number()) {
      out = v->get<double>();
    } else {
      errors_.push_back(absl::StrCat(Path(key), ": expected a number"));
    }
  }

  void String(absl::string_view key, std::string& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if (v->is_string()) {
      out = v->get<std::string>();
    } else {
      errors_.push_back(absl::StrCat(Path(key), ": expected a string"));
    }
  }

  // Returns the child object, or nullptr after recording a type error.
  const Json* Object(absl::string_view key) {
    const Json* v = Find(key);
    if (v == nullptr) return nullptr;
    if (!v->is_object()) {
      errors_.push_back(absl::StrCat(Path(key), ": expected an object"));
      return nullptr;
    }
    return v;
  }

  void RejectUnknown() {
    for (const auto& [key, value] : node_.items()) {
      if (known_.count(key) == 0) {
        errors_.push_back(absl::StrCat(Path(key), ": unknown key"));
      }
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> known_;
};

void ReadFederation(const Json& node, ExperimentConfig& c,
                    std::vector<std::string>& errors) {
  ObjectReader r(node, "federation", errors);
  sim::SimulationConfig& s = c.sim;
  r.Int("num_clients", s.num_clients);
  r.Int("clients_per_round", s.clients_per_round);
  r.Int("local_steps", s.local_steps);
  r.Int("rounds", s.rounds);
  r.Int("batch_size", s.batch_size);
  r.Double("eta", s.eta);
  if (const Json* w = r.Find("client_weights")) {
    if (!w->is_array()) {
      errors.push_back("federation.client_weights: expected an array");
    } else {
      s.client_weights.clear();
      for (size_t i = 0; i < w->size(); ++i) {
        if (!(*w)[i].is_number()) {
          errors.push_back(absl::StrCat("federation.client_weights[", i,
                                        "]: expected a number"));
        } else {
          s.client_weights.push_back((*w)[i].get<double>());
        }
      }
    }
  }
  r.RejectUnknown();
}

void ReadPrivacy(const Json& node, ExperimentConfig& c,
                 std::vector<std::string>& errors) {
  ObjectReader r(node, "privacy", errors);
  sim::SimulationConfig& s = c.sim;
  r.Double("epsilon", s.budget.epsilon);
  r.Double("delta", s.budget.delta);
  r.Double("tau", s.tau);
  if (const Json* clip = r.Object("clip")) {
    ObjectReader cr(*clip, "privacy.clip", errors);
    std::string mode = "fixed";
    cr.String("mode", mode);
    if (mode == "fixed") {
      s.clip.mode = privacy::ClipMode::kFixed;
    } else if (mode == "median") {
      s.clip.mode = privacy::ClipMode::kMedianAdaptive;
    } else {
      errors.push_back(absl::StrCat("privacy.clip.mode: unknown mode '", mode,
                                    "' (fixed, median)"));
    }
    cr.Double("s2", s.clip.s2);
    cr.RejectUnknown();
  }
  std::string stop = "fixed_rounds";
  r.String("stop_rule", stop);
  if (stop == "fixed_rounds") {
    s.stop_rule = sim::StopRule::kFixedRounds;
  } else if (stop == "accountant") {
    s.stop_rule = sim::StopRule::kAccountant;
  } else {
    errors.push_back(absl::StrCat("privacy.stop_rule: unknown rule '", stop,
                                  "' (fixed_rounds, accountant)"));
  }
  r.Int("max_rounds", s.max_rounds);
  r.RejectUnknown();
}

void ReadObjective(const Json& node, ExperimentConfig& c,
                   std::vector<std::string>& errors) {
  ObjectReader r(node, "objective", errors);
  ObjectiveConfig& o = c.objective;
  std::string kind = "least_squares";
  r.String("kind", kind);
  if (kind == "least_squares") {
    o.kind = training::ObjectiveKind::kLeastSquares;
  } else if (kind == "logistic") {
    o.kind = training::ObjectiveKind::kLogistic;
  } else {
    errors.push_back(absl::StrCat("objective.kind: unknown kind '", kind,
                                  "' (least_squares, logistic)"));
  }
  r.Int("dim", o.dim);
  r.Int("samples_per_client", o.samples_per_client);
  r.Double("label_noise", o.label_noise);
  r.Double("heterogeneity", o.heterogeneity);
  r.Double("ridge", o.ridge);
  r.Double("init_scale", o.init_scale);
  r.RejectUnknown();
}

void CheckFinite(double v, absl::string_view path, bool allow_zero,
                 std::vector<std::string>& errors) {
  if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
    errors.push_back(absl::StrCat(path, allow_zero ? ": must be finite and >= 0"
                                                   : ": must be finite and > 0"));
  }
}

}  // namespace

absl::Status ValidateExperimentConfig(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (absl::Status s = sim::ValidateSimulationConfig(c.sim); !s.ok()) {
    errors.push_back(std::string(s.message()));
  }
  if (c.sim.rounds < 1) errors.push_back("federation.rounds: must be >= 1");
  const ObjectiveConfig& o = c.objective;
  if (o.dim < 1) errors.push_back("objective.dim: must be >= 1");
  if (o.samples_per_client < 1) {
    errors.push_back("objective.samples_per_client: must be >= 1");
  }
  CheckFinite(o.label_noise, "objective.label_noise", true, errors);
  CheckFinite(o.heterogeneity, "objective.heterogeneity", true, errors);
  CheckFinite(o.ridge, "objective.ridge", true, errors);
  CheckFinite(o.init_scale, "objective.init_scale", true, errors);
  if (c.bound_linf.has_value()) {
    CheckFinite(*c.bound_linf, "bounds.linf", false, errors);
  }
  if (c.output.prefix.empty() ||
      c.output.prefix.find('/') != std::string::npos) {
    errors.push_back("output.prefix: must be a nonempty file name stem");
  }
  if (errors.empty()) return absl::OkStatus();
  return absl::InvalidArgumentError(absl::StrJoin(errors, "\n"));
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view json) {
  Json root = Json::parse(json.begin(), json.end(), nullptr, false);
  if (root.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  if (!root.is_object()) {
    return absl::InvalidArgumentError("config root must be a JSON object");
  }
  ExperimentConfig c;
  std::vector<std::string> errors;
  ObjectReader r(root, "", errors);

  std::string algo(wire::AlgorithmName(c.sim.algorithm));
  r.String("algorithm", algo);
  absl::StatusOr<wire::AlgorithmKind> kind = wire::ParseAlgorithmName(algo);
  if (kind.ok()) {
    c.sim.algorithm = *kind;
  } else {
    errors.push_back(absl::StrCat("algorithm: unknown algorithm '", algo, "'"));
  }
  r.Uint("seed", c.seed.root_seed);
  r.String("run_id", c.seed.run_id);
  if (const Json* f = r.Object("federation")) ReadFederation(*f, c, errors);
  if (const Json* p = r.Object("privacy")) ReadPrivacy(*p, c, errors);
  if (const Json* o = r.Object("objective")) ReadObjective(*o, c, errors);
  r.Double("divergence_ceiling", c.sim.divergence_ceiling);
  if (const Json* b = r.Object("bounds")) {
    ObjectReader br(*b, "bounds", errors);
    if (const Json* v = br.Find("linf"); v != nullptr && !v->is_null()) {
      if (v->is_number()) {
        c.bound_linf = v->get<double>();
      } else {
        errors.push_back("bounds.linf: expected a number or null");
      }
    }
    br.RejectUnknown();
  }
  if (const Json* out = r.Object("output")) {
    ObjectReader orr(*out, "output", errors);
    orr.String("dir", c.output.dir);
    orr.String("prefix", c.output.prefix);
    orr.RejectUnknown();
  }
  r.RejectUnknown();

  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "\n"));
  }
  if (absl::Status s = ValidateExperimentConfig(c); !s.ok()) return s;
  return c;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open config ", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfig(buffer.str());
}

absl::StatusOr<BuiltProblem> BuildProblem(const ExperimentConfig& config) {
  if (absl::Status s = ValidateExperimentConfig(config); !s.ok()) return s;
  const ObjectiveConfig& o = config.objective;
  absl::StatusOr<training::SynthProblem> synth = training::SynthPartition(
      config.seed, {.kind = o.kind,
                    .num_clients = config.sim.num_clients,
                    .dim = o.dim,
                    .samples_per_client = o.samples_per_client,
                    .noise_std = o.label_noise,
                    .heterogeneity = o.heterogeneity});
  if (!synth.ok()) return synth.status();

  BuiltProblem built;
  built.problem.objective = training::Objective(o.kind, o.ridge);
  built.problem.clients = std::move(synth->clients);
  built.problem.theta0 = Eigen::VectorXd::Zero(o.dim);
  if (o.init_scale > 0.0) {
    const std::vector<prng::UniformPair> draws = prng::ElementPairs(
        config.seed, prng::StreamDomain::kInitialization, 0, 0,
        static_cast<size_t>(o.dim));
    for (int64_t j = 0; j < o.dim; ++j) {
      built.problem.theta0(j) =
          o.init_scale * NormalQuantile(draws[static_cast<size_t>(j)].first);
    }
  }
  absl::StatusOr<training::ObjectiveSpec> spec = training::Characterize(
      built.problem.objective, built.problem.clients, built.problem.theta0);
  if (!spec.ok()) return spec.status();
  built.spec = std::move(*spec);
  return built;
}

analysis::BoundInputs BoundInputsForRun(const ExperimentConfig& config,
                                        const training::ObjectiveSpec& spec,
                                        const sim::RunTrace& trace) {
  const sim::SimulationConfig& s = config.sim;
  analysis::BoundInputs in;
  in.initial_gap = spec.initial_gap;
  in.eta = s.eta;
  in.local_steps = s.local_steps;
  in.rounds = s.rounds;
  in.clients_per_round = s.clients_per_round;
  in.num_clients = s.num_clients;
  in.dim = spec.dim;
  in.alpha_sq = spec.alpha_sq;
  in.smoothness = spec.smoothness;
  in.s2 = s.clip.s2;
  in.epsilon = s.budget.epsilon;
  in.delta = s.budget.delta;
  in.tau = s.tau;
  if (config.bound_linf.has_value()) {
    in.linf = *config.bound_linf;
  } else {
    double sum = 0.0;
    int64_t count = 0;
    for (const sim::RoundRecord& r : trace.rounds) {
      for (double v : r.client_linf) {
        sum += v;
        ++count;
      }
    }
    in.linf = count > 0 && sum > 0.0 ? sum / static_cast<double>(count) : in.s2;
  }
  return in;
}

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& config) {
  absl::StatusOr<BuiltProblem> built = BuildProblem(config);
  if (!built.ok()) return built.status();
  absl::StatusOr<sim::RunTrace> trace =
      sim::RunSimulation(config.sim, built->problem, config.seed);
  if (!trace.ok()) return trace.status();
  ExperimentResult result;
  result.spec = std::move(built->spec);
  result.trace = std::move(*trace);
  absl::StatusOr<analysis::BoundReport> bounds = analysis::CompareBounds(
      BoundInputsForRun(config, result.spec, result.trace));
  if (!bounds.ok()) return bounds.status();
  result.bounds = *bounds;
  return result;
}

}  // namespace gaulrq::config
