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

#include "gaulrq/normal.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace gaulrq {
namespace {

TEST(NormalQuantileTest, MatchesReferenceValues) {
  EXPECT_NEAR(NormalQuantile(0.75), 0.6744897501960817432, 1e-15);
  EXPECT_NEAR(NormalQuantile(0.975), 1.9599639845400542355, 1e-14);
  EXPECT_NEAR(NormalQuantile(1e-10), -6.3613409024040562047, 1e-13);
  EXPECT_NEAR(NormalQuantile(0.999999), 4.7534243088228989482, 1e-9);
  EXPECT_EQ(NormalQuantile(0.5), 0.0);
}

TEST(NormalQuantileTest, IsOddAroundOneHalf) {
  // Complements of these are exact in binary64.
  for (double p : {0x1p-52, 0x1p-30, 0.0078125, 0.2, 0.4999}) {
    EXPECT_NEAR(NormalQuantile(p), -NormalQuantile(1.0 - p),
                1e-12 * std::max(1.0, std::abs(NormalQuantile(p))))
        << p;
  }
}

TEST(NormalQuantileTest, EndpointsAreInfinite) {
  EXPECT_EQ(NormalQuantile(0.0), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(NormalQuantile(1.0), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isnan(NormalQuantile(std::nan(""))));
}

TEST(NormalCdfTest, MatchesReferenceValues) {
  EXPECT_NEAR(NormalCdf(1.0), 0.84134474606854294859, 1e-16);
  EXPECT_NEAR(NormalCdf(-5.0) / 2.8665157187919391167e-7, 1.0, 1e-14);
  EXPECT_NEAR(NormalCdf(8.0), 0.9999999999999993779, 1e-16);
  EXPECT_EQ(NormalCdf(0.0), 0.5);
}

TEST(NormalCdfTest, InvertsQuantile) {
  for (double p = 1e-6; p < 1.0; p += 0.0137) {
    EXPECT_NEAR(NormalCdf(NormalQuantile(p)), p, 4e-16 + 1e-14 * p) << p;
  }
}

}  // namespace
}  // namespace gaulrq
