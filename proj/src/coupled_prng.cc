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

#include "gaulrq/coupled_prng.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace gaulrq::prng {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t Absorb(uint64_t state, uint64_t value) {
  return Mix64(state ^ Mix64(value + kGolden));
}

uint64_t StreamKey(const SeedMaterial& seed, const StreamCursor& cursor) {
  uint64_t h = Mix64(seed.root_seed);
  h = Absorb(h, seed.run_id.size());
  for (unsigned char c : seed.run_id) h = Absorb(h, c);
  h = Absorb(h, static_cast<uint64_t>(cursor.domain));
  h = Absorb(h, cursor.client_id);
  h = Absorb(h, cursor.round);
  h = Absorb(h, cursor.element_index);
  return h;
}

uint64_t CounterWord(uint64_t key, uint64_t counter) {
  return Mix64(key + (counter + 1) * kGolden);
}

}  // namespace

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double ToOpenUnit(uint64_t word) {
  // 2^64 + 1 is not representable; the double nearest to it is 2^64.
  constexpr double kDenominator = 18446744073709551616.0;
  double u = (static_cast<double>(word) + 1.0) / kDenominator;
  if (!(u > 0.0)) u = std::nextafter(0.0, 1.0);
  if (!(u < 1.0)) u = std::nextafter(1.0, 0.0);
  return u;
}

UniformPair DeriveUniformPair(const SeedMaterial& seed,
                              const StreamCursor& cursor) {
  const uint64_t key = StreamKey(seed, cursor);
  const uint64_t base = 2 * cursor.draw_counter;
  return {ToOpenUnit(CounterWord(key, base)),
          ToOpenUnit(CounterWord(key, base + 1))};
}

absl::StatusOr<SeedMaterial> ParseSeedMaterial(std::string_view text) {
  SeedMaterial out;
  out.run_id = "default";
  bool have_seed = false;
  for (absl::string_view token :
       absl::StrSplit(absl::string_view(text.data(), text.size()),
                      absl::ByAnyChar(" \t\r\n,"), absl::SkipEmpty())) {
    std::pair<absl::string_view, absl::string_view> kv =
        absl::StrSplit(token, absl::MaxSplits('=', 1));
    if (kv.first == "seed") {
      if (!absl::SimpleAtoi(kv.second, &out.root_seed) ||
          absl::StartsWith(kv.second, "-")) {
        return absl::InvalidArgumentError(
            absl::StrCat("seed: not an unsigned 64-bit integer: '", kv.second,
                         "'"));
      }
      have_seed = true;
    } else if (kv.first == "run") {
      if (kv.second.empty()) {
        return absl::InvalidArgumentError("run: empty run label");
      }
      out.run_id = std::string(kv.second);
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown seed field '", token, "'"));
    }
  }
  if (!have_seed) return absl::InvalidArgumentError("seed: field missing");
  return out;
}

absl::StatusOr<SeedMaterial> ReadSeedFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open seed file ", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSeedMaterial(buffer.str());
}

UniformStream::UniformStream(SeedMaterial seed, StreamCursor start)
    : seed_(std::move(seed)), cursor_(start) {}

UniformPair UniformStream::NextPair() {
  UniformPair pair = DeriveUniformPair(seed_, cursor_);
  ++cursor_.draw_counter;
  return pair;
}

double UniformStream::NextUniform() { return NextPair().first; }

uint64_t UniformStream::NextBelow(uint64_t bound) {
  const double u = NextUniform();
  auto index = static_cast<uint64_t>(u * static_cast<double>(bound));
  return index < bound ? index : bound - 1;
}

std::vector<UniformPair> ElementPairs(const SeedMaterial& seed,
                                      StreamDomain domain, uint64_t client_id,
                                      uint64_t round, size_t dim) {
  std::vector<UniformPair> pairs;
  pairs.reserve(dim);
  StreamCursor cursor{.client_id = client_id, .round = round, .domain = domain};
  for (size_t j = 0; j < dim; ++j) {
    cursor.element_index = j;
    pairs.push_back(DeriveUniformPair(seed, cursor));
  }
  return pairs;
}

}  // namespace gaulrq::prng
