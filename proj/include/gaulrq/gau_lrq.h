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

// Quantizer codecs: the Gaussian layered randomized quantizer (Gau-LRQ), the
// subtractively dithered uniform quantizer it generalizes, and the unbiased
// stochastic quantizer used by the quantize-after-noise baseline.
//
// Gau-LRQ draws a random rectangle ("layer") under the Gaussian density, then
// applies a dithered quantizer whose step is the rectangle width and whose
// dither is the rectangle's x coordinate. Averaged over layers the
// reconstruction error is exactly N(0, sigma^2) and independent of the input,
// which is what lets the quantizer double as a Gaussian DP mechanism.

#ifndef GAULRQ_GAU_LRQ_H_
#define GAULRQ_GAU_LRQ_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "gaulrq/coupled_prng.h"

namespace gaulrq::quant {

// Widest fixed-length index the wire format carries.
inline constexpr int kMaxBitsPerElement = 32;

// One draw of the layered coupler.
//   left  = -sigma * sqrt(-2 ln(1 - y))
//   right =  sigma * sqrt(-2 ln y)
//   q_step = right - left >= 2 sigma sqrt(2 ln 2), equality at y = 1/2.
struct LayerSample {
  double x = 0.0;
  double y = 0.5;
  double left = 0.0;
  double right = 0.0;
  double q_step = 0.0;
};

// 2 sigma sqrt(2 ln 2): the smallest step any layer can have.
double MinimumStep(double sigma);

// Draws a layer from two uniforms: x = sigma * Phi^-1(u1),
// y0 = exp(-(x/sigma)^2 / 2) * u2, and y = y0 for x >= 0, 1 - y0 otherwise.
absl::StatusOr<LayerSample> SampleLayer(double sigma,
                                        prng::UniformPair uniforms);

// Structural checks only: finite fields, left < 0 < right,
// q_step == right - left, x in [left, right].
absl::Status ValidateLayer(const LayerSample& layer);

// m = floor((u + right - x) / q_step).
absl::StatusOr<int64_t> LrqEncode(double u, const LayerSample& layer);

// u_hat = m * q_step + x. For m = LrqEncode(u, layer), u_hat - u lies in
// (left, right].
absl::StatusOr<double> LrqDecode(int64_t m, const LayerSample& layer);

// Fixed-length width for inputs in [a1, a2]:
// ceil(log2((a2 - a1) / MinimumStep(sigma) + 1)), at least 1.
absl::StatusOr<int> BitWidth(double a1, double a2, double sigma);

// BitWidth(-linf, linf, sigma), or 1 when linf == 0. Both the wire meter and
// the closed-form cost calculator go through this function.
absl::StatusOr<int> SymmetricBitWidth(double linf, double sigma);

// Binds an encoded vector to the (client, round) stream it was drawn from.
struct StreamTag {
  uint32_t client_id = 0;
  uint32_t round = 0;

  friend bool operator==(const StreamTag&, const StreamTag&) = default;
};

// Output of the element-wise Gau-LRQ encoder.
//
// `indices` hold the wire form of each lattice index m_j: the index is
// shifted by the lowest index reachable from the signaled range, which both
// ends can compute from the shared layer, then centered into the signed
// two's-complement range [-2^(b-1), 2^(b-1) - 1]. For any input inside the
// signaled range this is lossless; anything that still falls outside is
// clamped and counted in `clamp_count`.
struct EncodedVector {
  std::vector<int64_t> indices;
  size_t dim = 0;
  int bits_per_element = 1;
  StreamTag stream_tag;
  int64_t clamp_count = 0;
};

class GauLrqCodec {
 public:
  static absl::StatusOr<GauLrqCodec> Create(double sigma);

  double sigma() const { return sigma_; }

  absl::StatusOr<LayerSample> Sample(prng::UniformPair uniforms) const {
    return SampleLayer(sigma_, uniforms);
  }

  // Encodes `values` element-wise; `uniforms[j]` drives element j.
  absl::StatusOr<EncodedVector> Quantize(
      std::span<const double> values,
      std::span<const prng::UniformPair> uniforms, StreamTag tag = {}) const;

  // Server-side inverse. `uniforms` must be the same pairs the client used.
  absl::StatusOr<std::vector<double>> Dequantize(
      const EncodedVector& encoded,
      std::span<const prng::UniformPair> uniforms) const;

 private:
  explicit GauLrqCodec(double sigma) : sigma_(sigma) {}

  double sigma_;
};

// Free-function form of GauLrqCodec::Quantize.
absl::StatusOr<EncodedVector> LrqQuantizeVector(
    std::span<const double> values, double sigma,
    std::span<const prng::UniformPair> uniforms, StreamTag tag = {});

// Subtractively dithered uniform quantizer with a deterministic step.
class DitheredCodec {
 public:
  static absl::StatusOr<DitheredCodec> Create(double q_step);

  double q_step() const { return q_step_; }

  // x = (u - 1/2) * q_step, inside (-q_step/2, q_step/2).
  double DitherFromUniform(double u) const { return (u - 0.5) * q_step_; }

  int64_t Encode(double u, double dither) const;
  double Decode(int64_t m, double dither) const;

 private:
  explicit DitheredCodec(double q_step) : q_step_(q_step) {}

  double q_step_;
};

// m = floor((u + x) / q_step + 1/2).
absl::StatusOr<int64_t> DitheredEncode(double u, double q_step, double dither);
// u_hat = m * q_step - x.
absl::StatusOr<double> DitheredDecode(int64_t m, double q_step, double dither);

// Stochastic quantizer output: level index per element on the grid
// -scale + k * (2 * scale / l), k = 0..l, with l = 2^bits - 1.
struct StochasticLevels {
  std::vector<int64_t> levels;
  double scale = 0.0;
  int bits = 1;
};

// Unbiased stochastic rounding onto 2^bits evenly spaced points spanning
// [-scale, scale]. `scale` is ||v||_inf rounded up to the nearest float so
// that it survives a 32-bit wire field exactly. `uniforms[j]` decides the
// rounding direction of element j.
absl::StatusOr<StochasticLevels> StochasticQuantizeLevels(
    std::span<const double> values, int bits,
    std::span<const double> uniforms);

std::vector<double> StochasticReconstruct(const StochasticLevels& levels);

// Quantize-then-reconstruct convenience wrapper.
absl::StatusOr<std::vector<double>> StochasticQuantize(
    std::span<const double> values, int bits,
    std::span<const double> uniforms);

}  // namespace gaulrq::quant

#endif  // GAULRQ_GAU_LRQ_H_
