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

#ifndef GAULRQ_COUPLED_PRNG_H_
#define GAULRQ_COUPLED_PRNG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace gaulrq::prng {

// Shared seed distributed once to the server and every client.
struct SeedMaterial {
  uint64_t root_seed = 0;
  std::string run_id;

  friend bool operator==(const SeedMaterial&, const SeedMaterial&) = default;
};

// Independent families of streams. The quantizer domain is the one whose
// draws must be reproduced on both ends of the wire; the others are local to
// a single party but use the same addressing so runs replay exactly.
enum class StreamDomain : uint32_t {
  kQuantizer = 0,
  kGaussianNoise = 1,
  kStochasticRounding = 2,
  kLocalBatch = 3,
  kClientSampling = 4,
  kDataSynthesis = 5,
  kInitialization = 6,
};

// Address of one pair of uniforms. Every random draw in the simulator is
// named by a cursor, so results do not depend on evaluation order.
struct StreamCursor {
  uint64_t client_id = 0;
  uint64_t round = 0;
  uint64_t element_index = 0;
  uint64_t draw_counter = 0;
  StreamDomain domain = StreamDomain::kQuantizer;

  friend bool operator==(const StreamCursor&, const StreamCursor&) = default;
};

struct UniformPair {
  double first = 0.5;
  double second = 0.5;

  friend bool operator==(const UniformPair&, const UniformPair&) = default;
};

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t z);

// Maps a 64-bit word to (value + 1) / (2^64 + 1), nudged to stay strictly
// inside (0, 1) after rounding to double.
double ToOpenUnit(uint64_t word);

// Counter-mode keyed PRF: a pure function of (seed, cursor). The two uniforms
// come from counters 2 * draw_counter and 2 * draw_counter + 1 of the keyed
// stream for (domain, client_id, round, element_index).
UniformPair DeriveUniformPair(const SeedMaterial& seed,
                              const StreamCursor& cursor);

// Parses `seed=<u64> run=<token>`; separators may be whitespace or commas.
// `seed` is required, `run` defaults to "default".
absl::StatusOr<SeedMaterial> ParseSeedMaterial(std::string_view text);
absl::StatusOr<SeedMaterial> ReadSeedFile(const std::filesystem::path& path);

// Sequential reader over the draws of one (domain, client, round, element)
// stream. Each call to NextPair advances draw_counter by one.
class UniformStream {
 public:
  UniformStream(SeedMaterial seed, StreamCursor start);

  UniformPair NextPair();
  // Returns the first member of the next pair; the second is discarded.
  double NextUniform();
  // Uniform integer in [0, bound) from a single uniform draw.
  uint64_t NextBelow(uint64_t bound);

  const StreamCursor& cursor() const { return cursor_; }

 private:
  SeedMaterial seed_;
  StreamCursor cursor_;
};

// One pair per element: element_index = j, draw_counter = 0. This is the
// stream-consumption contract shared by encoder and decoder.
std::vector<UniformPair> ElementPairs(const SeedMaterial& seed,
                                      StreamDomain domain, uint64_t client_id,
                                      uint64_t round, size_t dim);

}  // namespace gaulrq::prng

#endif  // GAULRQ_COUPLED_PRNG_H_
