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

#include "gaulrq/wire_format.h"

#include <bit>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace gaulrq::wire {
namespace {

constexpr std::string_view kNames[] = {"local_sgd", "gau_sgd", "qg_sgd",
                                       "gau_lrq_sgd", "dynamic_gau_lrq_sgd"};

void PutU32(uint32_t v, std::vector<uint8_t>& out) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> bytes, size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

size_t PayloadBytes(const WireHeader& h) {
  return static_cast<size_t>((PayloadBits(h) + 7) / 8);
}

bool HasScale(AlgorithmKind kind) { return kind == AlgorithmKind::kQgSgd; }

}  // namespace

std::string_view AlgorithmName(AlgorithmKind kind) {
  return kNames[static_cast<size_t>(kind)];
}

absl::StatusOr<AlgorithmKind> ParseAlgorithmName(std::string_view name) {
  for (size_t i = 0; i < std::size(kNames); ++i) {
    if (kNames[i] == name) return static_cast<AlgorithmKind>(i);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown algorithm '", std::string(name),
                                                 "'"));
}

bool CarriesFloats(AlgorithmKind kind) {
  return kind == AlgorithmKind::kLocalSgd || kind == AlgorithmKind::kGauSgd;
}

int64_t PayloadBits(const WireHeader& header) {
  return static_cast<int64_t>(header.dim) * header.bits_per_element;
}

absl::Status PackSigned(std::span<const int64_t> values, int bits,
                        std::vector<uint8_t>& out) {
  if (bits < 1 || bits > 63) {
    return absl::InvalidArgumentError(absl::StrCat("bad width ", bits));
  }
  const int64_t lo = -(int64_t{1} << (bits - 1));
  const int64_t hi = (int64_t{1} << (bits - 1)) - 1;
  const uint64_t mask = (uint64_t{1} << bits) - 1;
  const size_t start = out.size();
  out.resize(start + (values.size() * static_cast<size_t>(bits) + 7) / 8, 0);
  size_t bit = 0;
  for (int64_t v : values) {
    if (v < lo || v > hi) {
      return absl::OutOfRangeError(
          absl::StrCat("value ", v, " does not fit in ", bits, " bits"));
    }
    uint64_t word = static_cast<uint64_t>(v) & mask;
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((word >> b) & 1u) out[start + bit / 8] |= uint8_t{1} << (bit % 8);
    }
  }
  return absl::OkStatus();
}

std::vector<int64_t> UnpackSigned(std::span<const uint8_t> bytes, size_t count,
                                  int bits) {
  std::vector<int64_t> values;
  values.reserve(count);
  size_t bit = 0;
  for (size_t i = 0; i < count; ++i) {
    uint64_t word = 0;
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((bytes[bit / 8] >> (bit % 8)) & 1u) word |= uint64_t{1} << b;
    }
    if (bits < 64 && ((word >> (bits - 1)) & 1u)) word |= ~uint64_t{0} << bits;
    values.push_back(static_cast<int64_t>(word));
  }
  return values;
}

absl::StatusOr<std::vector<uint8_t>> Serialize(const WireMessage& message) {
  const WireHeader& h = message.header;
  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + kScaleBytes + PayloadBytes(h));
  PutU32(h.client_id, out);
  PutU32(h.round, out);
  PutU32(h.dim, out);
  out.push_back(h.bits_per_element);
  out.push_back(static_cast<uint8_t>(h.algorithm));

  if (CarriesFloats(h.algorithm)) {
    if (h.bits_per_element != 32 || message.values.size() != h.dim) {
      return absl::InvalidArgumentError(
          "float payload needs 32-bit width and dim values");
    }
    for (float v : message.values) PutU32(std::bit_cast<uint32_t>(v), out);
    return out;
  }
  if (message.indices.size() != h.dim) {
    return absl::InvalidArgumentError(
        absl::StrCat("header dim ", h.dim, " but ", message.indices.size(),
                     " indices"));
  }
  if (HasScale(h.algorithm)) PutU32(std::bit_cast<uint32_t>(message.scale), out);
  if (absl::Status s = PackSigned(message.indices, h.bits_per_element, out);
      !s.ok()) {
    return s;
  }
  return out;
}

absl::StatusOr<WireMessage> Parse(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    return absl::InvalidArgumentError(
        absl::StrCat("message of ", bytes.size(), " bytes is shorter than the ",
                     kHeaderBytes, "-byte header"));
  }
  WireMessage message;
  WireHeader& h = message.header;
  h.client_id = GetU32(bytes, 0);
  h.round = GetU32(bytes, 4);
  h.dim = GetU32(bytes, 8);
  h.bits_per_element = bytes[12];
  if (bytes[13] >= std::size(kNames)) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown algorithm tag ", bytes[13]));
  }
  h.algorithm = static_cast<AlgorithmKind>(bytes[13]);
  const bool floats = CarriesFloats(h.algorithm);
  if (floats ? h.bits_per_element != 32
             : (h.bits_per_element < 1 || h.bits_per_element > 32)) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid bits_per_element ",
                     static_cast<int>(h.bits_per_element), " for ",
                     std::string(AlgorithmName(h.algorithm))));
  }
  size_t at = kHeaderBytes;
  const size_t side = HasScale(h.algorithm) ? kScaleBytes : 0;
  if (bytes.size() != at + side + PayloadBytes(h)) {
    return absl::InvalidArgumentError(
        absl::StrCat("message length ", bytes.size(), " does not match header (",
                     at + side + PayloadBytes(h), " expected)"));
  }
  if (side > 0) {
    message.scale = std::bit_cast<float>(GetU32(bytes, at));
    at += side;
  }
  std::span<const uint8_t> payload = bytes.subspan(at);
  if (floats) {
    message.values.reserve(h.dim);
    for (size_t j = 0; j < h.dim; ++j) {
      message.values.push_back(std::bit_cast<float>(GetU32(payload, 4 * j)));
    }
    return message;
  }
  const int64_t used_bits = PayloadBits(h);
  if (used_bits % 8 != 0) {
    const uint8_t pad_mask = static_cast<uint8_t>(0xFFu << (used_bits % 8));
    if (payload.back() & pad_mask) {
      return absl::InvalidArgumentError("nonzero padding bits");
    }
  }
  message.indices = UnpackSigned(payload, h.dim, h.bits_per_element);
  return message;
}

}  // namespace gaulrq::wire
