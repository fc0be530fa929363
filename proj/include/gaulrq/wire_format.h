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

// Binary client-to-server message.
//
//   offset  size  field
//   0       4     client_id         u32 little-endian
//   4       4     round             u32 little-endian
//   8       4     dim               u32 little-endian
//   12      1     bits_per_element  u8
//   13      1     algorithm tag     u8 (AlgorithmKind)
//   14      4     scale             f32 little-endian, QG-SGD only
//   ...           payload           dim * bits_per_element bits, LSB-first,
//                                   zero-padded to a byte boundary
//
// Quantized algorithms carry signed two's-complement indices of the declared
// width. LocalSGD and GauSGD carry IEEE-754 binary32 values (width 32).

#ifndef GAULRQ_WIRE_FORMAT_H_
#define GAULRQ_WIRE_FORMAT_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace gaulrq::wire {

enum class AlgorithmKind : uint8_t {
  kLocalSgd = 0,
  kGauSgd = 1,
  kQgSgd = 2,
  kGauLrqSgd = 3,
  kDynamicGauLrqSgd = 4,
};

std::string_view AlgorithmName(AlgorithmKind kind);
absl::StatusOr<AlgorithmKind> ParseAlgorithmName(std::string_view name);

// True for algorithms whose payload is raw binary32.
bool CarriesFloats(AlgorithmKind kind);

inline constexpr size_t kHeaderBytes = 14;
inline constexpr size_t kScaleBytes = 4;

struct WireHeader {
  uint32_t client_id = 0;
  uint32_t round = 0;
  uint32_t dim = 0;
  uint8_t bits_per_element = 32;
  AlgorithmKind algorithm = AlgorithmKind::kLocalSgd;
};

struct WireMessage {
  WireHeader header;
  float scale = 0.0f;            // QG-SGD only
  std::vector<int64_t> indices;  // quantized algorithms
  std::vector<float> values;     // float algorithms
};

// dim * bits_per_element: what the communication meter charges. Header,
// side information and byte padding are excluded.
int64_t PayloadBits(const WireHeader& header);

absl::StatusOr<std::vector<uint8_t>> Serialize(const WireMessage& message);
absl::StatusOr<WireMessage> Parse(std::span<const uint8_t> bytes);

// Fixed-width two's-complement bit packing, LSB-first.
absl::Status PackSigned(std::span<const int64_t> values, int bits,
                        std::vector<uint8_t>& out);
std::vector<int64_t> UnpackSigned(std::span<const uint8_t> bytes, size_t count,
                                  int bits);

}  // namespace gaulrq::wire

#endif  // GAULRQ_WIRE_FORMAT_H_
