// Copyright 2026 The cadsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <set>

#include "cadsim/rng.hpp"

namespace cadsim
{
namespace
{

TEST(Rng, DerivationIsDeterministic)
{
  EXPECT_EQ(derive_seed(42, Stream::kVehicle, 7), derive_seed(42, Stream::kVehicle, 7));
  Rng a = make_rng(42, Stream::kLaa);
  Rng b = make_rng(42, Stream::kLaa);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a(), b());
  }
}

TEST(Rng, StreamsMastersAndIndicesAreDistinct)
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {0ULL, 1ULL, 2ULL}) {
    for (auto tag : {Stream::kSynthetic, Stream::kVehicle, Stream::kPreference, Stream::kLaa,
        Stream::kQosLane, Stream::kQosTtc, Stream::kRepetition, Stream::kShard})
    {
      for (std::uint64_t i = 0; i < 50; ++i) {
        seen.insert(derive_seed(master, tag, i));
      }
    }
  }
  EXPECT_EQ(seen.size(), 3u * 8u * 50u);
}

TEST(Rng, Mix64MatchesSplitMixReference)
{
  // First output of a SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}

}  // namespace
}  // namespace cadsim
