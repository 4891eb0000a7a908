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

#ifndef CADSIM__ASSIGNMENT_HPP_
#define CADSIM__ASSIGNMENT_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cadsim
{

/// Benefit of giving `item` to `bidder`. Pairs without an edge are forbidden.
struct BenefitEdge
{
  std::size_t bidder = 0;
  std::size_t item = 0;
  std::int64_t benefit = 0;
};

/// Optimal partial one-to-one matching; entry i holds the item won by bidder i.
using Matching = std::vector<std::optional<std::size_t>>;

/// Maximum-benefit partial assignment by the forward auction algorithm with
/// epsilon scaling.
///
/// Bidders and items may stay unassigned. Internally the problem is embedded in
/// a square one by giving every bidder a private zero-benefit dummy item and
/// every item a dummy bidder, so a perfect matching always exists. Benefits are
/// multiplied by (n + 1) and the final phase runs at epsilon = 1, which makes
/// the result exactly optimal for integer benefits.
///
/// Benefits must be non-negative; zero-benefit edges never change the optimum
/// and are ignored. Duplicate (bidder, item) edges keep the largest benefit.
Matching auction_assign(std::size_t bidders, std::size_t items, std::span<const BenefitEdge> edges);

/// Reference solver by exhaustive search over a dense bidder x item matrix.
/// Intended for instances up to 8 x 8.
Matching exhaustive_assign(const std::vector<std::vector<std::int64_t>> & benefit);

std::int64_t matching_value(const Matching & matching, std::span<const BenefitEdge> edges);
std::int64_t matching_value(
  const Matching & matching, const std::vector<std::vector<std::int64_t>> & benefit);

}  // namespace cadsim

#endif  // CADSIM__ASSIGNMENT_HPP_
