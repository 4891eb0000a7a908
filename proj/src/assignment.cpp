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

#include "cadsim/assignment.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

namespace cadsim
{

namespace
{

struct Arc
{
  std::size_t object;
  std::int64_t benefit;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

Matching auction_assign(std::size_t bidders, std::size_t items, std::span<const BenefitEdge> edges)
{
  Matching result(bidders);
  if (bidders == 0) {
    return result;
  }

  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> unique;
  for (const auto & e : edges) {
    if (e.bidder >= bidders || e.item >= items) {
      throw std::out_of_range("assignment edge index out of range");
    }
    if (e.benefit < 0) {
      throw std::invalid_argument("assignment benefits must be non-negative");
    }
    if (e.benefit == 0) {
      continue;
    }
    auto & b = unique[{e.bidder, e.item}];
    b = std::max(b, e.benefit);
  }
  if (unique.empty()) {
    return result;
  }

  // Persons: bidders, then one dummy per item. Objects: items, then one dummy
  // per bidder.
  const std::size_t n = bidders + items;
  const auto scale = static_cast<std::int64_t>(n + 1);
  std::vector<std::vector<Arc>> adj(n);
  std::int64_t max_benefit = 0;
  for (std::size_t b = 0; b < bidders; ++b) {
    adj[b].push_back({items + b, 0});
  }
  for (std::size_t i = 0; i < items; ++i) {
    adj[bidders + i].push_back({i, 0});
  }
  for (const auto & [key, benefit] : unique) {
    const auto [b, i] = key;
    adj[b].push_back({i, benefit * scale});
    adj[bidders + i].push_back({items + b, 0});
    max_benefit = std::max(max_benefit, benefit * scale);
  }

  std::vector<std::int64_t> price(n, 0);
  std::vector<std::size_t> owner(n, kNone);
  std::vector<std::size_t> holds(n, kNone);

  std::int64_t eps = std::max<std::int64_t>(1, max_benefit / 4);
  while (true) {
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(holds.begin(), holds.end(), kNone);
    std::deque<std::size_t> queue;
    for (std::size_t p = 0; p < n; ++p) {
      queue.push_back(p);
    }
    while (!queue.empty()) {
      const std::size_t person = queue.front();
      queue.pop_front();
      std::size_t best_obj = kNone;
      std::int64_t best = std::numeric_limits<std::int64_t>::min();
      std::int64_t second = std::numeric_limits<std::int64_t>::min();
      for (const auto & arc : adj[person]) {
        const std::int64_t value = arc.benefit - price[arc.object];
        if (value > best) {
          second = best;
          best = value;
          best_obj = arc.object;
        } else if (value > second) {
          second = value;
        }
      }
      // A person with a single arc may raise the price by any amount >= eps.
      const std::int64_t increment =
        (second == std::numeric_limits<std::int64_t>::min()) ? max_benefit + eps :
        best - second + eps;
      price[best_obj] += increment;
      const std::size_t previous = owner[best_obj];
      if (previous != kNone) {
        holds[previous] = kNone;
        queue.push_back(previous);
      }
      owner[best_obj] = person;
      holds[person] = best_obj;
    }
    if (eps == 1) {
      break;
    }
    eps = std::max<std::int64_t>(1, eps / 4);
  }

  for (std::size_t b = 0; b < bidders; ++b) {
    if (holds[b] < items) {
      result[b] = holds[b];
    }
  }
  return result;
}

namespace
{

void exhaustive_search(
  const std::vector<std::vector<std::int64_t>> & benefit, std::size_t bidder,
  std::vector<bool> & used, Matching & current, std::int64_t value, std::int64_t & best_value,
  Matching & best)
{
  if (bidder == benefit.size()) {
    if (value > best_value) {
      best_value = value;
      best = current;
    }
    return;
  }
  current[bidder] = std::nullopt;
  exhaustive_search(benefit, bidder + 1, used, current, value, best_value, best);
  for (std::size_t item = 0; item < benefit[bidder].size(); ++item) {
    if (used[item] || benefit[bidder][item] <= 0) {
      continue;
    }
    used[item] = true;
    current[bidder] = item;
    exhaustive_search(
      benefit, bidder + 1, used, current, value + benefit[bidder][item], best_value, best);
    used[item] = false;
  }
  current[bidder] = std::nullopt;
}

}  // namespace

Matching exhaustive_assign(const std::vector<std::vector<std::int64_t>> & benefit)
{
  const std::size_t items = benefit.empty() ? 0 : benefit.front().size();
  for (const auto & row : benefit) {
    if (row.size() != items) {
      throw std::invalid_argument("benefit matrix rows differ in length");
    }
  }
  std::vector<bool> used(items, false);
  Matching current(benefit.size());
  Matching best(benefit.size());
  std::int64_t best_value = 0;
  exhaustive_search(benefit, 0, used, current, 0, best_value, best);
  return best;
}

std::int64_t matching_value(const Matching & matching, std::span<const BenefitEdge> edges)
{
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> lookup;
  for (const auto & e : edges) {
    auto & b = lookup[{e.bidder, e.item}];
    b = std::max(b, e.benefit);
  }
  std::int64_t total = 0;
  for (std::size_t b = 0; b < matching.size(); ++b) {
    if (matching[b]) {
      const auto it = lookup.find({b, *matching[b]});
      if (it != lookup.end()) {
        total += it->second;
      }
    }
  }
  return total;
}

std::int64_t matching_value(
  const Matching & matching, const std::vector<std::vector<std::int64_t>> & benefit)
{
  std::int64_t total = 0;
  for (std::size_t b = 0; b < matching.size(); ++b) {
    if (matching[b]) {
      total += benefit[b][*matching[b]];
    }
  }
  return total;
}

}  // namespace cadsim
