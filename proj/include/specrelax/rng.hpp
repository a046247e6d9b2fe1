// Copyright 2026 The specrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace specrelax {

// Counter-based uniform stream: draw i depends only on (seed, i), so the
// sequence replays exactly regardless of how callers interleave work.
// One stream per generation session; not thread-safe.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace specrelax
