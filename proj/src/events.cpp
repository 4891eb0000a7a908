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

#include "cadsim/events.hpp"

namespace cadsim
{

std::string to_string(EventKind kind)
{
  switch (kind) {
    case EventKind::kEnter: return "enter";
    case EventKind::kSilenceStart: return "silence_start";
    case EventKind::kPseudonymChange: return "pseudonym_change";
    case EventKind::kLeave: return "leave";
  }
  return "unknown";
}

std::vector<std::size_t> change_counts(const EventLog & log, std::size_t vehicles)
{
  std::vector<std::size_t> counts(vehicles, 0);
  for (const auto & e : log) {
    if (e.kind == EventKind::kPseudonymChange && e.vehicle < vehicles) {
      ++counts[e.vehicle];
    }
  }
  return counts;
}

std::vector<PseudonymSpan> pseudonym_spans(const EventLog & log, std::size_t vehicles)
{
  std::vector<PseudonymSpan> spans(vehicles);
  for (const auto & e : log) {
    if (e.vehicle >= vehicles) {
      continue;
    }
    if (e.kind == EventKind::kEnter) {
      spans[e.vehicle].first = e.new_pseudonym;
      spans[e.vehicle].last = e.new_pseudonym;
    } else if (e.kind == EventKind::kPseudonymChange) {
      spans[e.vehicle].last = e.new_pseudonym;
    }
  }
  return spans;
}

}  // namespace cadsim
