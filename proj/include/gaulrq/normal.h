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

#ifndef GAULRQ_NORMAL_H_
#define GAULRQ_NORMAL_H_

namespace gaulrq {

// Standard normal CDF.
double NormalCdf(double z);

// Inverse of NormalCdf. `p` must lie strictly inside (0, 1); the endpoints
// map to -inf / +inf. Acklam's rational approximation followed by one Halley
// correction step, accurate to a few ulps across the whole open interval.
double NormalQuantile(double p);

}  // namespace gaulrq

#endif  // GAULRQ_NORMAL_H_
