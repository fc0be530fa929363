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

// Run artifacts: per-round CSV, summary JSON and bound-report JSON.
//
// CSV columns, in order:
//   round, algo, loss, grad_sq_norm, bits_cum, sigma, eps_cum, clamps
// Floats use 17 significant digits; eps_cum is "inf" for runs without noise.
// Non-finite numbers become null in the JSON documents.

#ifndef GAULRQ_TRACE_IO_H_
#define GAULRQ_TRACE_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "gaulrq/analysis.h"
#include "gaulrq/config.h"
#include "gaulrq/orchestrator.h"

namespace gaulrq::io {

inline constexpr std::string_view kCsvHeader =
    "round,algo,loss,grad_sq_norm,bits_cum,sigma,eps_cum,clamps";

std::string FormatDouble(double v);

std::string TraceCsv(const sim::RunTrace& trace);
std::string SummaryJson(const config::ExperimentConfig& config,
                        const config::ExperimentResult& result);
std::string BoundReportJson(const analysis::BoundReport& report);

// Reads a BoundInputs document; keys match the struct field names, all
// optional, unknown keys rejected.
absl::StatusOr<analysis::BoundInputs> ParseBoundInputs(std::string_view json);

struct ArtifactPaths {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path bounds;
};

// Writes <prefix>_trace.csv, <prefix>_summary.json and <prefix>_bounds.json
// under `dir`, creating it if needed.
absl::StatusOr<ArtifactPaths> WriteArtifacts(
    const std::filesystem::path& dir, std::string_view prefix,
    const config::ExperimentConfig& config,
    const config::ExperimentResult& result);

}  // namespace gaulrq::io

#endif  // GAULRQ_TRACE_IO_H_
