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

#include <cstdint>
#include <vector>

#include <gtest/gtest.h>
#include "absl/status/status.h"

namespace gaulrq::wire {
namespace {

TEST(AlgorithmNameTest, RoundTrips) {
  for (AlgorithmKind k :
       {AlgorithmKind::kLocalSgd, AlgorithmKind::kGauSgd, AlgorithmKind::kQgSgd,
        AlgorithmKind::kGauLrqSgd, AlgorithmKind::kDynamicGauLrqSgd}) {
    absl::StatusOr<AlgorithmKind> parsed = ParseAlgorithmName(AlgorithmName(k));
    ASSERT_TRUE(parsed.ok());
    EXPECT_EQ(*parsed, k);
  }
  EXPECT_FALSE(ParseAlgorithmName("gau-lrq").ok());
}

TEST(PackSignedTest, KnownBitLayout) {
  std::vector<uint8_t> out;
  const std::vector<int64_t> v = {-1, 0, 1, -2};  // 2 bits: 11 00 01 10
  ASSERT_TRUE(PackSigned(v, 2, out).ok());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 0b10010011);
  EXPECT_EQ(UnpackSigned(out, 4, 2), v);
}

TEST(PackSignedTest, RoundTripsEveryWidth) {
  for (int bits = 1; bits <= 32; ++bits) {
    const int64_t lo = -(int64_t{1} << (bits - 1));
    const int64_t hi = (int64_t{1} << (bits - 1)) - 1;
    const std::vector<int64_t> v = {lo, hi, 0, lo / 2, hi / 3, -1 % (hi + 1)};
    std::vector<uint8_t> out;
    ASSERT_TRUE(PackSigned(v, bits, out).ok()) << bits;
    EXPECT_EQ(out.size(), (v.size() * bits + 7) / 8);
    EXPECT_EQ(UnpackSigned(out, v.size(), bits), v) << bits;
  }
}

TEST(PackSignedTest, RejectsOutOfRange) {
  std::vector<uint8_t> out;
  EXPECT_EQ(PackSigned(std::vector<int64_t>{2}, 2, out).code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(PackSigned(std::vector<int64_t>{0}, 0, out).ok());
}

TEST(SerializeTest, QuantizedRoundTrip) {
  WireMessage m;
  m.header = {.client_id = 7, .round = 3, .dim = 5, .bits_per_element = 3,
              .algorithm = AlgorithmKind::kGauLrqSgd};
  m.indices = {-4, 3, 0, -1, 2};
  absl::StatusOr<std::vector<uint8_t>> bytes = Serialize(m);
  ASSERT_TRUE(bytes.ok());
  EXPECT_EQ(bytes->size(), kHeaderBytes + 2);
  EXPECT_EQ(PayloadBits(m.header), 15);
  absl::StatusOr<WireMessage> back = Parse(*bytes);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->header.client_id, 7u);
  EXPECT_EQ(back->header.round, 3u);
  EXPECT_EQ(back->header.dim, 5u);
  EXPECT_EQ(back->header.bits_per_element, 3);
  EXPECT_EQ(back->header.algorithm, AlgorithmKind::kGauLrqSgd);
  EXPECT_EQ(back->indices, m.indices);
}

TEST(SerializeTest, ScaleTravelsForQg) {
  WireMessage m;
  m.header = {.dim = 2, .bits_per_element = 2,
              .algorithm = AlgorithmKind::kQgSgd};
  m.scale = 0.375f;
  m.indices = {1, -2};
  absl::StatusOr<std::vector<uint8_t>> bytes = Serialize(m);
  ASSERT_TRUE(bytes.ok());
  EXPECT_EQ(bytes->size(), kHeaderBytes + kScaleBytes + 1);
  absl::StatusOr<WireMessage> back = Parse(*bytes);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back->scale, 0.375f);
  EXPECT_EQ(back->indices, m.indices);
}

TEST(SerializeTest, FloatRoundTripIsBitExact) {
  WireMessage m;
  m.header = {.client_id = 1, .dim = 3, .bits_per_element = 32,
              .algorithm = AlgorithmKind::kGauSgd};
  m.values = {1.5f, -0.0f, 3.4028235e38f};
  absl::StatusOr<std::vector<uint8_t>> bytes = Serialize(m);
  ASSERT_TRUE(bytes.ok());
  EXPECT_EQ(bytes->size(), kHeaderBytes + 12);
  absl::StatusOr<WireMessage> back = Parse(*bytes);
  ASSERT_TRUE(back.ok());
  ASSERT_EQ(back->values.size(), 3u);
  for (size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(std::bit_cast<uint32_t>(back->values[j]),
              std::bit_cast<uint32_t>(m.values[j]));
  }
}

TEST(SerializeTest, HeaderIsLittleEndian) {
  WireMessage m;
  m.header = {.client_id = 0x01020304, .round = 0, .dim = 1,
              .bits_per_element = 1, .algorithm = AlgorithmKind::kGauLrqSgd};
  m.indices = {0};
  absl::StatusOr<std::vector<uint8_t>> bytes = Serialize(m);
  ASSERT_TRUE(bytes.ok());
  EXPECT_EQ((*bytes)[0], 0x04);
  EXPECT_EQ((*bytes)[3], 0x01);
  EXPECT_EQ((*bytes)[13], 3);
}

TEST(SerializeTest, RejectsInconsistentMessages) {
  WireMessage m;
  m.header = {.dim = 2, .bits_per_element = 2,
              .algorithm = AlgorithmKind::kGauLrqSgd};
  m.indices = {0};
  EXPECT_FALSE(Serialize(m).ok());
  m.header.algorithm = AlgorithmKind::kLocalSgd;
  m.values = {0.0f, 1.0f};
  EXPECT_FALSE(Serialize(m).ok());  // float payload needs width 32
}

TEST(ParseTest, RejectsMalformedInput) {
  WireMessage m;
  m.header = {.dim = 3, .bits_per_element = 2,
              .algorithm = AlgorithmKind::kGauLrqSgd};
  m.indices = {1, 0, -1};
  std::vector<uint8_t> good = *Serialize(m);

  EXPECT_FALSE(Parse(std::vector<uint8_t>(good.begin(), good.begin() + 5)).ok());
  std::vector<uint8_t> truncated(good.begin(), good.end() - 1);
  EXPECT_FALSE(Parse(truncated).ok());
  std::vector<uint8_t> extra = good;
  extra.push_back(0);
  EXPECT_FALSE(Parse(extra).ok());
  std::vector<uint8_t> tag = good;
  tag[13] = 9;
  EXPECT_FALSE(Parse(tag).ok());
  std::vector<uint8_t> width = good;
  width[12] = 0;
  EXPECT_FALSE(Parse(width).ok());
  std::vector<uint8_t> padding = good;
  padding.back() |= 0x80;
  EXPECT_FALSE(Parse(padding).ok());
}

}  // namespace
}  // namespace gaulrq::wire
