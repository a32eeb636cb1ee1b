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

#ifndef DYNDP_RNG_H_
#define DYNDP_RNG_H_

#include <cstdint>
#include <limits>

namespace dyndp {

// What a random stream is used for. Each (seed, node, purpose) triple names an
// independent stream, so a node's draws never depend on which worker thread
// ran it or on how many other nodes exist.
enum class StreamPurpose : std::uint64_t {
  kSampling = 1,
  kNoise = 2,
  kData = 3,
  kInit = 4,
};

// Counter-based generator: the i-th output of a stream is
// SplitMix64Finalize(key + (i + 1) * golden_gamma), a pure function of the key
// and the counter. Satisfies UniformRandomBitGenerator.
//
// Gaussian draws use the Box-Muller transform on two uniforms in (0, 1); the
// second variate of each pair is cached and returned by the next call.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t node, StreamPurpose purpose);
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double Uniform();

  // Uniform integer in [0, n). Unbiased (rejection on the short tail).
  std::uint64_t UniformIndex(std::uint64_t n);

  // Standard normal variate.
  double Gaussian();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stateless SplitMix64 finalizer, exposed for key derivation.
std::uint64_t Mix64(std::uint64_t x);

}  // namespace dyndp

#endif  // DYNDP_RNG_H_
