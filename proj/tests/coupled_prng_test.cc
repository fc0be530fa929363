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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <utility>

#include <gtest/gtest.h>
#include "absl/status/status.h"

namespace gaulrq::prng {
namespace {

const SeedMaterial kSeed{.root_seed = 42, .run_id = "test"};

TEST(DeriveUniformPairTest, IsAPureFunction) {
  const StreamCursor cursor{.client_id = 3, .round = 7, .element_index = 11};
  EXPECT_EQ(DeriveUniformPair(kSeed, cursor), DeriveUniformPair(kSeed, cursor));
}

TEST(DeriveUniformPairTest, StaysInsideOpenUnitInterval) {
  UniformStream stream(kSeed, {});
  for (int i = 0; i < 100000; ++i) {
    const UniformPair p = stream.NextPair();
    ASSERT_GT(p.first, 0.0);
    ASSERT_LT(p.first, 1.0);
    ASSERT_GT(p.second, 0.0);
    ASSERT_LT(p.second, 1.0);
  }
}

TEST(DeriveUniformPairTest, NoCollisionsAcrossDrawCounters) {
  std::set<std::pair<double, double>> seen;
  UniformStream stream(kSeed, {});
  for (int i = 0; i < 100000; ++i) {
    const UniformPair p = stream.NextPair();
    EXPECT_TRUE(seen.insert({p.first, p.second}).second) << "draw " << i;
  }
}

TEST(DeriveUniformPairTest, EveryCursorFieldChangesTheDraw) {
  const StreamCursor base{.client_id = 1, .round = 2, .element_index = 3,
                          .draw_counter = 4,
                          .domain = StreamDomain::kQuantizer};
  const UniformPair ref = DeriveUniformPair(kSeed, base);
  StreamCursor c = base;
  c.client_id = 2;
  EXPECT_NE(DeriveUniformPair(kSeed, c), ref);
  c = base;
  c.round = 3;
  EXPECT_NE(DeriveUniformPair(kSeed, c), ref);
  c = base;
  c.element_index = 4;
  EXPECT_NE(DeriveUniformPair(kSeed, c), ref);
  c = base;
  c.draw_counter = 5;
  EXPECT_NE(DeriveUniformPair(kSeed, c), ref);
  c = base;
  c.domain = StreamDomain::kGaussianNoise;
  EXPECT_NE(DeriveUniformPair(kSeed, c), ref);
  EXPECT_NE(DeriveUniformPair({.root_seed = 43, .run_id = "test"}, base), ref);
  EXPECT_NE(DeriveUniformPair({.root_seed = 42, .run_id = "tesu"}, base), ref);
}

TEST(UniformStreamTest, ClientAndServerStreamsAgree) {
  const StreamCursor start{.client_id = 9, .round = 4,
                           .domain = StreamDomain::kQuantizer};
  UniformStream client(kSeed, start);
  UniformStream server(kSeed, start);
  for (int i = 0; i < 100000; ++i) {
    const UniformPair a = client.NextPair();
    const UniformPair b = server.NextPair();
    ASSERT_EQ(a.first, b.first);
    ASSERT_EQ(a.second, b.second);
  }
  EXPECT_EQ(client.cursor().draw_counter, 100000u);
}

TEST(UniformStreamTest, MatchesDirectDerivation) {
  UniformStream stream(kSeed, {.element_index = 5});
  for (uint64_t i = 0; i < 10; ++i) {
    EXPECT_EQ(stream.NextPair(),
              DeriveUniformPair(kSeed, {.element_index = 5, .draw_counter = i}));
  }
}

TEST(UniformStreamTest, NextBelowStaysInRangeAndCoversIt) {
  UniformStream stream(kSeed, {});
  std::set<uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const uint64_t v = stream.NextBelow(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(ElementPairsTest, UsesElementIndexAndCounterZero) {
  const auto pairs = ElementPairs(kSeed, StreamDomain::kQuantizer, 2, 3, 4);
  ASSERT_EQ(pairs.size(), 4u);
  for (uint64_t j = 0; j < 4; ++j) {
    EXPECT_EQ(pairs[j], DeriveUniformPair(kSeed, {.client_id = 2, .round = 3,
                                                  .element_index = j}));
  }
}

TEST(ToOpenUnitTest, ExtremesStayInside) {
  EXPECT_GT(ToOpenUnit(0), 0.0);
  EXPECT_LT(ToOpenUnit(std::numeric_limits<uint64_t>::max()), 1.0);
}

TEST(ParseSeedMaterialTest, ParsesSeedAndRun) {
  absl::StatusOr<SeedMaterial> s = ParseSeedMaterial("seed=42, run=a");
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(*s, (SeedMaterial{.root_seed = 42, .run_id = "a"}));
}

TEST(ParseSeedMaterialTest, RunDefaults) {
  absl::StatusOr<SeedMaterial> s = ParseSeedMaterial("seed=5");
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->run_id, "default");
}

TEST(ParseSeedMaterialTest, AcceptsMaxSeed) {
  absl::StatusOr<SeedMaterial> s =
      ParseSeedMaterial("seed=18446744073709551615 run=x");
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->root_seed, std::numeric_limits<uint64_t>::max());
}

TEST(ParseSeedMaterialTest, RejectsBadInput) {
  EXPECT_EQ(ParseSeedMaterial("run=a").status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(ParseSeedMaterial("seed=-1").ok());
  EXPECT_FALSE(ParseSeedMaterial("seed=18446744073709551616").ok());
  EXPECT_FALSE(ParseSeedMaterial("seed=12x").ok());
  EXPECT_FALSE(ParseSeedMaterial("seed=1 colour=red").ok());
}

TEST(ReadSeedFileTest, ReadsFileAndReportsMissing) {
  const auto path =
      std::filesystem::temp_directory_path() / "gaulrq_seed_test.txt";
  std::ofstream(path) << "seed=7\nrun=file\n";
  absl::StatusOr<SeedMaterial> s = ReadSeedFile(path);
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(*s, (SeedMaterial{.root_seed = 7, .run_id = "file"}));
  std::filesystem::remove(path);
  EXPECT_FALSE(ReadSeedFile(path).ok());
}

}  // namespace
}  // namespace gaulrq::prng
