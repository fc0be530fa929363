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

#include "gaulrq/trace_io.h"

#include <cmath>
#include <fstream>
#include <set>
#include <system_error>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "json.hpp"

namespace gaulrq::io {
namespace {

using Json = nlohmann::ordered_json;

Json Number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json InputsJson(const analysis::BoundInputs& in) {
  Json j;
  j["initial_gap"] = Number(in.initial_gap);
  j["eta"] = Number(in.eta);
  j["local_steps"] = in.local_steps;
  j["rounds"] = in.rounds;
  j["clients_per_round"] = in.clients_per_round;
  j["num_clients"] = in.num_clients;
  j["dim"] = in.dim;
  j["alpha_sq"] = Number(in.alpha_sq);
  j["smoothness"] = Number(in.smoothness);
  j["s2"] = Number(in.s2);
  j["epsilon"] = Number(in.epsilon);
  j["delta"] = Number(in.delta);
  j["tau"] = Number(in.tau);
  j["linf"] = Number(in.linf);
  return j;
}

Json ReportJson(const analysis::BoundReport& r) {
  Json j;
  j["inputs"] = InputsJson(r.inputs);
  j["bound_lsgd"] = Number(r.lsgd);
  j["bound_gau_lrq"] = Number(r.gau_lrq);
  j["bound_dynamic"] = Number(r.dynamic);
  j["bound_qg"] = Number(r.qg);
  j["bound_bq"] = Number(r.bq);
  j["am_qm_factor"] = Number(r.am_qm);
  j["step_size_ok"] = r.step_size_ok;
  j["dynamic_le_gau_lrq"] = r.dynamic_le_fixed;
  j["gau_lrq_le_qg"] = r.fixed_le_qg;
  j["gau_lrq_le_bq"] = r.fixed_le_bq;
  return j;
}

absl::Status WriteFile(const std::filesystem::path& path,
                       std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) {
    return absl::DataLossError(absl::StrCat("short write to ", path.string()));
  }
  return absl::OkStatus();
}

}  // namespace

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.17g", v);
}

std::string TraceCsv(const sim::RunTrace& trace) {
  std::string out = absl::StrCat(std::string(kCsvHeader), "\n");
  const std::string algo(wire::AlgorithmName(trace.algorithm));
  int64_t bits = 0;
  for (const sim::RoundRecord& r : trace.rounds) {
    bits += r.bits_sent;
    absl::StrAppend(&out, r.round, ",", algo, ",", FormatDouble(r.loss), ",",
                    FormatDouble(r.grad_sq_norm), ",", bits, ",",
                    FormatDouble(r.sigma_used), ",",
                    FormatDouble(r.epsilon_spent_cumulative), ",",
                    r.clamp_count, "\n");
  }
  return out;
}

std::string SummaryJson(const config::ExperimentConfig& config,
                        const config::ExperimentResult& result) {
  const sim::RunSummary& s = result.trace.summary;
  Json j;
  j["algorithm"] = std::string(wire::AlgorithmName(result.trace.algorithm));
  j["seed"] = config.seed.root_seed;
  j["run_id"] = config.seed.run_id;
  j["status"] = std::string(sim::RunStatusName(s.status));
  j["message"] = s.message;
  j["rounds_completed"] = s.rounds_completed;
  j["initial_loss"] = Number(s.initial_loss);
  j["final_loss"] = Number(s.final_loss);
  j["initial_grad_sq_norm"] = Number(s.initial_grad_sq_norm);
  j["final_grad_sq_norm"] = Number(s.final_grad_sq_norm);
  j["weighted_error"] =
      s.weighted_error.has_value() ? Number(*s.weighted_error) : Json(nullptr);
  j["total_bits"] = s.total_bits;
  j["epsilon_spent"] = Number(s.epsilon_spent);
  j["epsilon_budget"] = Number(config.sim.budget.epsilon);
  j["total_clamps"] = s.total_clamps;
  j["total_quantized_elements"] = s.total_quantized_elements;
  j["clamp_rate"] =
      s.total_quantized_elements > 0
          ? Number(static_cast<double>(s.total_clamps) /
                   static_cast<double>(s.total_quantized_elements))
          : Json(nullptr);
  Json obj;
  obj["smoothness"] = Number(result.spec.smoothness);
  obj["alpha_sq"] = Number(result.spec.alpha_sq);
  obj["optimum_value"] = Number(result.spec.optimum_value);
  obj["initial_gap"] = Number(result.spec.initial_gap);
  j["objective"] = obj;
  Json tau = Json::array();
  for (const sim::RoundRecord& r : result.trace.rounds) {
    tau.push_back(r.tau_estimate.has_value() ? Number(*r.tau_estimate)
                                             : Json(nullptr));
  }
  j["tau_estimates"] = tau;
  return j.dump(2) + "\n";
}

std::string BoundReportJson(const analysis::BoundReport& report) {
  return ReportJson(report).dump(2) + "\n";
}

absl::StatusOr<analysis::BoundInputs> ParseBoundInputs(std::string_view json) {
  nlohmann::json root =
      nlohmann::json::parse(json.begin(), json.end(), nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    return absl::InvalidArgumentError("bound inputs must be a JSON object");
  }
  analysis::BoundInputs in;
  std::vector<std::string> errors;
  const std::set<std::string> ints = {"local_steps", "rounds",
                                      "clients_per_round", "num_clients",
                                      "dim"};
  for (const auto& [key, value] : root.items()) {
    if (ints.count(key) > 0) {
      if (!value.is_number_integer()) {
        errors.push_back(absl::StrCat(key, ": expected an integer"));
        continue;
      }
      const auto v = value.get<int64_t>();
      if (key == "local_steps") in.local_steps = v;
      if (key == "rounds") in.rounds = v;
      if (key == "clients_per_round") in.clients_per_round = v;
      if (key == "num_clients") in.num_clients = v;
      if (key == "dim") in.dim = v;
      continue;
    }
    double* target = nullptr;
    if (key == "initial_gap") target = &in.initial_gap;
    if (key == "eta") target = &in.eta;
    if (key == "alpha_sq") target = &in.alpha_sq;
    if (key == "smoothness") target = &in.smoothness;
    if (key == "s2") target = &in.s2;
    if (key == "epsilon") target = &in.epsilon;
    if (key == "delta") target = &in.delta;
    if (key == "tau") target = &in.tau;
    if (key == "linf") target = &in.linf;
    if (target == nullptr) {
      errors.push_back(absl::StrCat(key, ": unknown key"));
    } else if (!value.is_number()) {
      errors.push_back(absl::StrCat(key, ": expected a number"));
    } else {
      *target = value.get<double>();
    }
  }
  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "\n"));
  }
  if (absl::Status s = analysis::ValidateBoundInputs(in); !s.ok()) return s;
  return in;
}

absl::StatusOr<ArtifactPaths> WriteArtifacts(
    const std::filesystem::path& dir, std::string_view prefix,
    const config::ExperimentConfig& config,
    const config::ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  const std::string stem(prefix);
  ArtifactPaths paths{.csv = dir / (stem + "_trace.csv"),
                      .summary = dir / (stem + "_summary.json"),
                      .bounds = dir / (stem + "_bounds.json")};
  if (absl::Status s = WriteFile(paths.csv, TraceCsv(result.trace)); !s.ok()) {
    return s;
  }
  if (absl::Status s = WriteFile(paths.summary, SummaryJson(config, result));
      !s.ok()) {
    return s;
  }
  if (absl::Status s = WriteFile(paths.bounds, BoundReportJson(result.bounds));
      !s.ok()) {
    return s;
  }
  return paths;
}

}  // namespace gaulrq::io
