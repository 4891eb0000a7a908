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

#ifndef CADSIM__EVENTS_HPP_
#define CADSIM__EVENTS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cadsim/schemes.hpp"

namespace cadsim
{

enum class EventKind { kEnter, kSilenceStart, kPseudonymChange, kLeave };

std::string to_string(EventKind kind);

/// One line of the scheme event log. `vehicle` indexes TraceSet::traces.
struct SchemeEvent
{
  std::int64_t step = 0;
  std::size_t vehicle = 0;
  EventKind kind = EventKind::kEnter;
  Pseudonym old_pseudonym = 0;
  Pseudonym new_pseudonym = 0;
  ExitReason reason = ExitReason::kNone;

  bool operator==(const SchemeEvent &) const = default;
};

using EventLog = std::vector<SchemeEvent>;

/// Pseudonym at the first and at the last step of a vehicle's lifetime.
struct PseudonymSpan
{
  Pseudonym first = 0;
  Pseudonym last = 0;
  bool changed() const { return first != last; }
};

std::vector<std::size_t> change_counts(const EventLog & log, std::size_t vehicles);
std::vector<PseudonymSpan> pseudonym_spans(const EventLog & log, std::size_t vehicles);

}  // namespace cadsim

#endif  // CADSIM__EVENTS_HPP_
