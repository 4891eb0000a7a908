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

#ifndef CADSIM__RNG_HPP_
#define CADSIM__RNG_HPP_

#include <cstdint>
#include <random>

namespace cadsim
{

/// Independent random streams derived from one master seed.
enum class Stream : std::uint64_t
{
  kSynthetic = 1,
  kVehicle = 2,
  kPreference = 3,
  kLaa = 4,
  kQosLane = 5,
  kQosTtc = 6,
  kRepetition = 7,
  kShard = 8,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `tag`, element `index`, under `master`.
///
/// The derivation is mix64(mix64(mix64(master) ^ tag) ^ index), so every
/// (master, tag, index) triple yields an unrelated mt19937_64 seed and adding
/// vehicles or streams never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, Stream tag, std::uint64_t index = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, Stream tag, std::uint64_t index = 0)
{
  return Rng(derive_seed(master, tag, index));
}

}  // namespace cadsim

#endif  // CADSIM__RNG_HPP_
