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

// gaulrq command-line driver.
//
//   gaulrq run --config exp.json [--seed N] [--algo NAME] [--out-dir DIR]
//   gaulrq verify-noise --sigma 1 [--n 1000000] [--seed N]
//   gaulrq compare-bounds --inputs bounds.json [--out-dir DIR]
//   gaulrq quantizer-demo [--sigma 1] [--values 0.3,-1.2] [--seed N]
//
// Output directory precedence for `run`: --out-dir, the config's
// output.dir, $GAULRQ_OUT_DIR, then ./gaulrq_out.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "gaulrq/analysis.h"
#include "gaulrq/config.h"
#include "gaulrq/coupled_prng.h"
#include "gaulrq/gau_lrq.h"
#include "gaulrq/trace_io.h"
#include "gaulrq/wire_format.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;   // a check failed or the run diverged
constexpr int kExitInvalid = 2;  // bad flags, config or inputs

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status.message() << "\n";
  return kExitInvalid;
}

std::filesystem::path ResolveOutDir(const std::string& flag,
                                    const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("GAULRQ_OUT_DIR"); env && *env) return env;
  return "gaulrq_out";
}

struct RunFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out_dir;
  std::string algo;
};

int CmdRun(const RunFlags& flags) {
  absl::StatusOr<gaulrq::config::ExperimentConfig> config =
      gaulrq::config::LoadExperimentConfig(flags.config);
  if (!config.ok()) return Fail(config.status());
  if (flags.seed.has_value()) config->seed.root_seed = *flags.seed;
  if (!flags.algo.empty()) {
    absl::StatusOr<gaulrq::wire::AlgorithmKind> algo =
        gaulrq::wire::ParseAlgorithmName(flags.algo);
    if (!algo.ok()) return Fail(algo.status());
    config->sim.algorithm = *algo;
  }
  absl::StatusOr<gaulrq::config::ExperimentResult> result =
      gaulrq::config::RunExperiment(*config);
  if (!result.ok()) return Fail(result.status());

  const std::filesystem::path dir =
      ResolveOutDir(flags.out_dir, config->output.dir);
  absl::StatusOr<gaulrq::io::ArtifactPaths> paths =
      gaulrq::io::WriteArtifacts(dir, config->output.prefix, *config, *result);
  if (!paths.ok()) return Fail(paths.status());

  const gaulrq::sim::RunSummary& s = result->trace.summary;
  std::cout << absl::StrFormat(
      "%s: %s after %d rounds\n",
      std::string(gaulrq::wire::AlgorithmName(result->trace.algorithm)),
      std::string(gaulrq::sim::RunStatusName(s.status)), s.rounds_completed);
  if (!s.message.empty()) std::cout << "  " << s.message << "\n";
  std::cout << "  weighted error E  "
            << (s.weighted_error ? gaulrq::io::FormatDouble(*s.weighted_error)
                                 : std::string("n/a"))
            << "\n"
            << "  final loss        " << gaulrq::io::FormatDouble(s.final_loss)
            << "\n"
            << "  total bits        " << s.total_bits << "\n"
            << "  epsilon spent     "
            << gaulrq::io::FormatDouble(s.epsilon_spent) << "\n"
            << "  wrote " << paths->csv.string() << ", "
            << paths->summary.string() << ", " << paths->bounds.string()
            << "\n";
  return s.status == gaulrq::sim::RunStatus::kDiverged ? kExitFailed : kExitOk;
}

int CmdVerifyNoise(double sigma, int64_t n, uint64_t seed, double u) {
  absl::StatusOr<gaulrq::analysis::NoiseReport> report =
      gaulrq::analysis::GaussianNoiseSuite(
          sigma, n, {.root_seed = seed, .run_id = "verify-noise"}, u);
  if (!report.ok()) return Fail(report.status());
  std::cout << absl::StrFormat("sigma=%g n=%d u=%g\n", sigma, n, u);
  std::cout << absl::StrFormat("  sample mean      %.6g\n", report->sample_mean);
  std::cout << absl::StrFormat("  sample variance  %.6g\n",
                               report->sample_variance);
  for (const gaulrq::analysis::NoiseCheck& c : report->checks) {
    std::cout << absl::StrFormat("  %-4s %-22s %.6g (limit %.6g)\n",
                                 c.passed ? "PASS" : "FAIL", c.name, c.value,
                                 c.threshold);
  }
  return report->passed() ? kExitOk : kExitFailed;
}

int CmdCompareBounds(const std::string& inputs_path,
                     const std::string& out_dir) {
  std::ifstream in(inputs_path);
  if (!in) {
    return Fail(absl::NotFoundError("cannot open " + inputs_path));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<gaulrq::analysis::BoundInputs> inputs =
      gaulrq::io::ParseBoundInputs(buffer.str());
  if (!inputs.ok()) return Fail(inputs.status());
  absl::StatusOr<gaulrq::analysis::BoundReport> r =
      gaulrq::analysis::CompareBounds(*inputs);
  if (!r.ok()) return Fail(r.status());

  auto row = [](const char* name, double v) {
    std::cout << absl::StrFormat("  %-14s %s\n", name,
                                 gaulrq::io::FormatDouble(v));
  };
  row("bound_lsgd", r->lsgd);
  row("bound_gau_lrq", r->gau_lrq);
  row("bound_dynamic", r->dynamic);
  row("bound_qg", r->qg);
  row("bound_bq", r->bq);
  row("am_qm_factor", r->am_qm);
  std::cout << "  dynamic <= gau_lrq  " << (r->dynamic_le_fixed ? "yes" : "no")
            << "\n  gau_lrq <= qg       " << (r->fixed_le_qg ? "yes" : "no")
            << "\n  gau_lrq <= bq       " << (r->fixed_le_bq ? "yes" : "no")
            << "\n";
  if (!r->step_size_ok) {
    std::cout << "  warning: step size violates eta*nu*Q + nu^2*eta^2*Q(Q-1)/2"
                 " <= 1\n";
  }
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::filesystem::path path =
        std::filesystem::path(out_dir) / "bounds.json";
    std::ofstream out(path);
    out << gaulrq::io::BoundReportJson(*r);
    if (!out) return Fail(absl::PermissionDeniedError("cannot write " +
                                                      path.string()));
  }
  return kExitOk;
}

int CmdQuantizerDemo(double sigma, const std::vector<double>& values,
                     uint64_t seed) {
  const gaulrq::prng::SeedMaterial material{.root_seed = seed,
                                            .run_id = "quantizer-demo"};
  const std::vector<gaulrq::prng::UniformPair> draws =
      gaulrq::prng::ElementPairs(material,
                                 gaulrq::prng::StreamDomain::kQuantizer, 0, 0,
                                 values.size());
  absl::StatusOr<gaulrq::quant::GauLrqCodec> codec =
      gaulrq::quant::GauLrqCodec::Create(sigma);
  if (!codec.ok()) return Fail(codec.status());
  absl::StatusOr<gaulrq::quant::EncodedVector> encoded =
      codec->Quantize(values, draws);
  if (!encoded.ok()) return Fail(encoded.status());
  absl::StatusOr<std::vector<double>> decoded =
      codec->Dequantize(*encoded, draws);
  if (!decoded.ok()) return Fail(decoded.status());

  std::cout << absl::StrFormat("sigma=%g  bits/element=%d  clamps=%d\n", sigma,
                               encoded->bits_per_element,
                               encoded->clamp_count);
  std::cout << absl::StrFormat("%10s %10s %10s %10s %10s %8s %12s %10s\n",
                               "value", "x", "L", "R", "q", "index",
                               "decoded", "noise");
  for (size_t j = 0; j < values.size(); ++j) {
    absl::StatusOr<gaulrq::quant::LayerSample> layer = codec->Sample(draws[j]);
    if (!layer.ok()) return Fail(layer.status());
    std::cout << absl::StrFormat(
        "%10.4f %10.4f %10.4f %10.4f %10.4f %8d %12.6f %10.4f\n", values[j],
        layer->x, layer->left, layer->right, layer->q_step,
        encoded->indices[j], (*decoded)[j], (*decoded)[j] - values[j]);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gau-LRQ local SGD simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  uint64_t seed_value = 0;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", run_flags.config, "Experiment JSON")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* run_seed =
      run->add_option("--seed", seed_value, "Override the root seed");
  run->add_option("--algo", run_flags.algo, "Override the algorithm");
  run->add_option("--out-dir", run_flags.out_dir, "Artifact directory");

  double noise_sigma = 1.0;
  int64_t noise_n = 1000000;
  uint64_t noise_seed = 1;
  double noise_u = 0.37;
  CLI::App* verify =
      app.add_subcommand("verify-noise", "Monte-Carlo check of the noise law");
  verify->add_option("--sigma", noise_sigma, "Noise standard deviation");
  verify->add_option("--n", noise_n, "Number of round trips");
  verify->add_option("--seed", noise_seed, "Root seed");
  verify->add_option("--u", noise_u, "Fixed input value");

  std::string inputs_path;
  std::string bounds_out;
  CLI::App* compare =
      app.add_subcommand("compare-bounds", "Evaluate all convergence bounds");
  compare->add_option("--inputs,--config", inputs_path, "BoundInputs JSON")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out-dir", bounds_out, "Also write bounds.json here");

  double demo_sigma = 1.0;
  std::vector<double> demo_values = {0.3, -1.2, 2.5, 0.0};
  uint64_t demo_seed = 1;
  CLI::App* demo = app.add_subcommand("quantizer-demo",
                                      "Encode and decode a few values");
  demo->add_option("--sigma", demo_sigma, "Noise standard deviation");
  demo->add_option("--values", demo_values, "Values to quantize")
      ->delimiter(',');
  demo->add_option("--seed", demo_seed, "Root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  if (*run) {
    if (*run_seed) run_flags.seed = seed_value;
    return CmdRun(run_flags);
  }
  if (*verify) return CmdVerifyNoise(noise_sigma, noise_n, noise_seed, noise_u);
  if (*compare) return CmdCompareBounds(inputs_path, bounds_out);
  if (*demo) return CmdQuantizerDemo(demo_sigma, demo_values, demo_seed);
  return kExitInvalid;
}
