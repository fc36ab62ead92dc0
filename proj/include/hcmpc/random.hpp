// Copyright 2026 The hcmpc Authors.
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

#ifndef HCMPC_RANDOM_HPP_
#define HCMPC_RANDOM_HPP_

#include <cstdint>

namespace hcmpc {

// Counter-based seed derivation: the stream for case `index` depends only on
// the master seed and the index, never on scheduling order.
constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  // SplitMix64 finalizer applied to a golden-ratio counter.
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace hcmpc

#endif  // HCMPC_RANDOM_HPP_
