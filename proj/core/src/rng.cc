// Copyright 2026 The DynDP Authors
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

#include "dyndp/rng.h"

#include <cmath>
#include <numbers>

namespace dyndp {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t Mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t node,
                       StreamPurpose purpose)
    : key_(Mix64(Mix64(Mix64(seed) ^ (node * kGoldenGamma)) +
                 static_cast<std::uint64_t>(purpose))) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return Mix64(key_ + counter_ * kGoldenGamma);
}

double CounterRng::Uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::UniformIndex(std::uint64_t n) {
  // Values below `threshold` would over-represent small residues.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = (*this)();
    if (x >= threshold) return x % n;
  }
}

double CounterRng::Gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace dyndp
