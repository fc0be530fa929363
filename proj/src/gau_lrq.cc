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

#include "gaulrq/gau_lrq.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "gaulrq/normal.h"

namespace gaulrq::quant {
namespace {

constexpr double kIndexLimit = 9.0e18;

bool InOpenUnit(double u) { return u > 0.0 && u < 1.0; }

absl::Status CheckSigma(double sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be finite and positive, got ", sigma));
  }
  return absl::OkStatus();
}

absl::StatusOr<int64_t> FloorToIndex(double t) {
  if (!std::isfinite(t) || std::abs(t) > kIndexLimit) {
    return absl::OutOfRangeError(
        absl::StrCat("quantization index out of range: ", t));
  }
  return static_cast<int64_t>(std::floor(t));
}

double MaxAbs(std::span<const double> values) {
  double linf = 0.0;
  for (double v : values) linf = std::max(linf, std::abs(v));
  return linf;
}

absl::Status CheckFinite(std::span<const double> values) {
  for (size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      return absl::InvalidArgumentError(
          absl::StrCat("element ", j, " is not finite"));
    }
  }
  return absl::OkStatus();
}

// Lowest lattice index reachable by any input >= -half_range.
int64_t LatticeBase(double half_range, const LayerSample& layer) {
  return static_cast<int64_t>(
      std::floor((-half_range + layer.right - layer.x) / layer.q_step));
}

// Half-width of the symmetric range a b-bit index can cover losslessly.
double SignaledHalfRange(int bits, double sigma) {
  return (std::ldexp(1.0, bits) - 1.0) * MinimumStep(sigma) / 2.0;
}

}  // namespace

double MinimumStep(double sigma) {
  return 2.0 * sigma * std::sqrt(2.0 * std::numbers::ln2);
}

absl::StatusOr<LayerSample> SampleLayer(double sigma,
                                        prng::UniformPair uniforms) {
  if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
  if (!InOpenUnit(uniforms.first) || !InOpenUnit(uniforms.second)) {
    return absl::InvalidArgumentError(
        absl::StrCat("uniforms must lie strictly inside (0, 1), got (",
                     uniforms.first, ", ", uniforms.second, ")"));
  }
  LayerSample layer;
  layer.x = sigma * NormalQuantile(uniforms.first);
  const double z = layer.x / sigma;
  const double y0 = std::exp(-0.5 * z * z) * uniforms.second;
  // ln(y0) and ln(1 - y0) are taken directly so that the flipped branch keeps
  // full precision when y0 is tiny.
  const double short_side = sigma * std::sqrt(-2.0 * std::log1p(-y0));
  const double long_side = sigma * std::sqrt(-2.0 * std::log(y0));
  if (layer.x >= 0.0) {
    layer.y = y0;
    layer.left = -short_side;
    layer.right = long_side;
  } else {
    layer.y = 1.0 - y0;
    layer.left = -long_side;
    layer.right = short_side;
  }
  layer.q_step = layer.right - layer.left;
  layer.x = std::clamp(layer.x, layer.left, layer.right);
  return layer;
}

absl::Status ValidateLayer(const LayerSample& layer) {
  if (!std::isfinite(layer.x) || !std::isfinite(layer.left) ||
      !std::isfinite(layer.right) || !std::isfinite(layer.q_step)) {
    return absl::InvalidArgumentError("layer has non-finite fields");
  }
  if (!(layer.left < 0.0) || !(layer.right > 0.0)) {
    return absl::InvalidArgumentError("layer requires left < 0 < right");
  }
  if (layer.q_step != layer.right - layer.left) {
    return absl::InvalidArgumentError("layer q_step must equal right - left");
  }
  if (layer.x < layer.left || layer.x > layer.right) {
    return absl::InvalidArgumentError("layer dither x outside [left, right]");
  }
  return absl::OkStatus();
}

absl::StatusOr<int64_t> LrqEncode(double u, const LayerSample& layer) {
  if (!std::isfinite(u)) {
    return absl::InvalidArgumentError("input is not finite");
  }
  if (absl::Status s = ValidateLayer(layer); !s.ok()) return s;
  return FloorToIndex((u + layer.right - layer.x) / layer.q_step);
}

absl::StatusOr<double> LrqDecode(int64_t m, const LayerSample& layer) {
  if (absl::Status s = ValidateLayer(layer); !s.ok()) return s;
  return static_cast<double>(m) * layer.q_step + layer.x;
}

absl::StatusOr<int> BitWidth(double a1, double a2, double sigma) {
  if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
  if (!std::isfinite(a1) || !std::isfinite(a2) || !(a2 > a1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("range requires finite a1 < a2, got [", a1, ", ", a2,
                     "]"));
  }
  const double ratio = (a2 - a1) / MinimumStep(sigma);
  if (!std::isfinite(ratio)) {
    return absl::OutOfRangeError("range / step ratio overflows");
  }
  // The slack keeps exact powers of two (ratio = 1, 3, 7, ...) from being
  // pushed up a bit by rounding in the ratio.
  const double exact = std::log2(ratio + 1.0);
  const int bits = static_cast<int>(std::ceil(exact - 1e-12));
  return std::max(bits, 1);
}

absl::StatusOr<int> SymmetricBitWidth(double linf, double sigma) {
  if (!std::isfinite(linf) || linf < 0.0) {
    return absl::InvalidArgumentError("linf must be finite and >= 0");
  }
  if (linf == 0.0) {
    if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
    return 1;
  }
  return BitWidth(-linf, linf, sigma);
}

absl::StatusOr<GauLrqCodec> GauLrqCodec::Create(double sigma) {
  if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
  return GauLrqCodec(sigma);
}

absl::StatusOr<EncodedVector> GauLrqCodec::Quantize(
    std::span<const double> values,
    std::span<const prng::UniformPair> uniforms, StreamTag tag) const {
  if (values.size() != uniforms.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: ", values.size(), " values, ",
                     uniforms.size(), " uniform pairs"));
  }
  if (absl::Status s = CheckFinite(values); !s.ok()) return s;
  absl::StatusOr<int> bits = SymmetricBitWidth(MaxAbs(values), sigma_);
  if (!bits.ok()) return bits.status();
  if (*bits > kMaxBitsPerElement) {
    return absl::OutOfRangeError(
        absl::StrCat("update range needs ", *bits, " bits per element; max is ",
                     kMaxBitsPerElement));
  }

  EncodedVector out;
  out.dim = values.size();
  out.bits_per_element = *bits;
  out.stream_tag = tag;
  out.indices.reserve(values.size());
  const double half_range = SignaledHalfRange(*bits, sigma_);
  const int64_t offset = int64_t{1} << (*bits - 1);
  const int64_t lo = -offset;
  const int64_t hi = offset - 1;
  for (size_t j = 0; j < values.size(); ++j) {
    absl::StatusOr<LayerSample> layer = SampleLayer(sigma_, uniforms[j]);
    if (!layer.ok()) return layer.status();
    absl::StatusOr<int64_t> m = FloorToIndex(
        (values[j] + layer->right - layer->x) / layer->q_step);
    if (!m.ok()) return m.status();
    int64_t coded = *m - LatticeBase(half_range, *layer) - offset;
    if (coded < lo || coded > hi) {
      coded = std::clamp(coded, lo, hi);
      ++out.clamp_count;
    }
    out.indices.push_back(coded);
  }
  return out;
}

absl::StatusOr<std::vector<double>> GauLrqCodec::Dequantize(
    const EncodedVector& encoded,
    std::span<const prng::UniformPair> uniforms) const {
  if (encoded.indices.size() != encoded.dim ||
      uniforms.size() != encoded.dim) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: dim ", encoded.dim, ", ",
                     encoded.indices.size(), " indices, ", uniforms.size(),
                     " uniform pairs"));
  }
  const int bits = encoded.bits_per_element;
  if (bits < 1 || bits > kMaxBitsPerElement) {
    return absl::InvalidArgumentError(
        absl::StrCat("bits_per_element out of range: ", bits));
  }
  const double half_range = SignaledHalfRange(bits, sigma_);
  const int64_t offset = int64_t{1} << (bits - 1);
  std::vector<double> out;
  out.reserve(encoded.dim);
  for (size_t j = 0; j < encoded.dim; ++j) {
    const int64_t coded = encoded.indices[j];
    if (coded < -offset || coded > offset - 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("index ", j, " not representable in ", bits, " bits"));
    }
    absl::StatusOr<LayerSample> layer = SampleLayer(sigma_, uniforms[j]);
    if (!layer.ok()) return layer.status();
    const int64_t m = coded + offset + LatticeBase(half_range, *layer);
    out.push_back(static_cast<double>(m) * layer->q_step + layer->x);
  }
  return out;
}

absl::StatusOr<EncodedVector> LrqQuantizeVector(
    std::span<const double> values, double sigma,
    std::span<const prng::UniformPair> uniforms, StreamTag tag) {
  absl::StatusOr<GauLrqCodec> codec = GauLrqCodec::Create(sigma);
  if (!codec.ok()) return codec.status();
  return codec->Quantize(values, uniforms, tag);
}

absl::StatusOr<DitheredCodec> DitheredCodec::Create(double q_step) {
  if (!std::isfinite(q_step) || !(q_step > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("q_step must be finite and positive, got ", q_step));
  }
  return DitheredCodec(q_step);
}

int64_t DitheredCodec::Encode(double u, double dither) const {
  return static_cast<int64_t>(std::floor((u + dither) / q_step_ + 0.5));
}

double DitheredCodec::Decode(int64_t m, double dither) const {
  return static_cast<double>(m) * q_step_ - dither;
}

absl::StatusOr<int64_t> DitheredEncode(double u, double q_step,
                                       double dither) {
  absl::StatusOr<DitheredCodec> codec = DitheredCodec::Create(q_step);
  if (!codec.ok()) return codec.status();
  if (!std::isfinite(u) || !std::isfinite(dither)) {
    return absl::InvalidArgumentError("input or dither is not finite");
  }
  return FloorToIndex((u + dither) / q_step + 0.5);
}

absl::StatusOr<double> DitheredDecode(int64_t m, double q_step,
                                      double dither) {
  absl::StatusOr<DitheredCodec> codec = DitheredCodec::Create(q_step);
  if (!codec.ok()) return codec.status();
  return codec->Decode(m, dither);
}

absl::StatusOr<StochasticLevels> StochasticQuantizeLevels(
    std::span<const double> values, int bits,
    std::span<const double> uniforms) {
  if (bits < 1 || bits > kMaxBitsPerElement) {
    return absl::InvalidArgumentError(
        absl::StrCat("bits must be in [1, ", kMaxBitsPerElement, "], got ",
                     bits));
  }
  if (values.size() != uniforms.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: ", values.size(), " values, ",
                     uniforms.size(), " uniforms"));
  }
  if (absl::Status s = CheckFinite(values); !s.ok()) return s;

  StochasticLevels out;
  out.bits = bits;
  out.levels.assign(values.size(), 0);
  const double linf = MaxAbs(values);
  if (linf == 0.0) return out;
  if (linf > std::numeric_limits<float>::max()) {
    return absl::OutOfRangeError("vector range exceeds float scale field");
  }
  auto scale = static_cast<float>(linf);
  if (static_cast<double>(scale) < linf) {
    scale = std::nextafter(scale, std::numeric_limits<float>::infinity());
  }
  out.scale = scale;

  const auto top = static_cast<int64_t>((uint64_t{1} << bits) - 1);
  const double l = static_cast<double>(top);
  for (size_t j = 0; j < values.size(); ++j) {
    const double t =
        std::clamp((values[j] / out.scale + 1.0) * l / 2.0, 0.0, l);
    auto k = static_cast<int64_t>(std::floor(t));
    if (k < top && uniforms[j] < t - static_cast<double>(k)) ++k;
    out.levels[j] = k;
  }
  return out;
}

std::vector<double> StochasticReconstruct(const StochasticLevels& levels) {
  const double l = std::ldexp(1.0, levels.bits) - 1.0;
  std::vector<double> out;
  out.reserve(levels.levels.size());
  for (int64_t k : levels.levels) {
    out.push_back(levels.scale * ((2.0 * static_cast<double>(k) - l) / l));
  }
  return out;
}

absl::StatusOr<std::vector<double>> StochasticQuantize(
    std::span<const double> values, int bits,
    std::span<const double> uniforms) {
  absl::StatusOr<StochasticLevels> levels =
      StochasticQuantizeLevels(values, bits, uniforms);
  if (!levels.ok()) return levels.status();
  return StochasticReconstruct(*levels);
}

}  // namespace gaulrq::quant
