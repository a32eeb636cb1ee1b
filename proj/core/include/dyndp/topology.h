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

#ifndef DYNDP_TOPOLOGY_H_
#define DYNDP_TOPOLOGY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace dyndp {

// Dense n x n mixing matrix. Entry (i, j) is the weight node i applies to the
// message it receives from node j, so column j describes how node j splits
// its outgoing mass.
class MixingMatrix {
 public:
  MixingMatrix() = default;
  explicit MixingMatrix(std::size_t n) : n_(n), weights_(n * n, 0.0) {}

  // Builds from row-major rows; every row must have rows.size() entries.
  static absl::StatusOr<MixingMatrix> FromRows(
      const std::vector<std::vector<double>>& rows);
  static MixingMatrix Identity(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_[i * n_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return weights_[i * n_ + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {weights_.data() + i * n_, n_};
  }

  // Smallest strictly positive entry (0 for an all-zero matrix).
  double MinNonzeroWeight() const;

  friend bool operator==(const MixingMatrix&, const MixingMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> weights_;
};

// Node i sends to (i + 2^(k mod m)) mod n, m = floor(log2(n - 1)) + 1 (m = 1
// for n <= 2). Each sender keeps half its mass and pushes half to the receiver.
MixingMatrix ExponentialGraph(std::size_t n, std::uint64_t k);

// Number of distinct hop lengths the exponential graph cycles through.
std::size_t ExponentialGraphPeriod(std::size_t n);

// Static directed ring i -> (i + 1) mod n with a 1/2 - 1/2 split.
MixingMatrix RingGraph(std::size_t n);

// Uniform averaging, every entry 1/n.
MixingMatrix CompleteGraph(std::size_t n);

// Accepts P iff all entries are >= 0, every column sums to 1 within 1e-12 and
// every diagonal entry is positive. Errors name the offending index:
// "NegativeWeight", "ColumnSumViolation" or "MissingSelfLoop".
absl::Status ValidateColumnStochastic(const MixingMatrix& p);

enum class GraphKind { kExponential, kRing, kComplete, kExplicit };

absl::string_view GraphKindName(GraphKind kind);
absl::StatusOr<GraphKind> ParseGraphKind(absl::string_view name);

// Time-varying sequence of mixing matrices. Generated kinds depend only on
// (n, k mod period); explicit schedules cycle through the supplied list.
class GraphSchedule {
 public:
  static GraphSchedule Generated(GraphKind kind, std::size_t n);
  // Every matrix must be the same size and column-stochastic.
  static absl::StatusOr<GraphSchedule> Explicit(
      std::vector<MixingMatrix> matrices);

  GraphKind kind() const { return kind_; }
  std::size_t node_count() const { return n_; }
  std::size_t period() const;
  MixingMatrix MatrixAt(std::uint64_t k) const;

  // Minimum nonzero weight over one full period.
  double MinNonzeroWeight() const;

 private:
  GraphSchedule(GraphKind kind, std::size_t n) : kind_(kind), n_(n) {}

  GraphKind kind_;
  std::size_t n_;
  std::vector<MixingMatrix> explicit_;
};

struct ConnectivityReport {
  bool is_b_connected = false;
  std::size_t window = 1;
  // Largest diameter over all windows; meaningful only when connected.
  std::size_t diameter = 0;
};

// Unions the edge sets of each window of B consecutive iterations and checks
// strong connectivity by BFS. Windows are enumerated until the joint pattern
// of (window start mod period) repeats, which covers every distinct window.
absl::StatusOr<ConnectivityReport> CheckBStrongConnectivity(
    const GraphSchedule& schedule, std::size_t window);

struct SpectralConstants {
  double eps_min = 0.0;
  double lambda = 0.0;
  double q = 0.0;
  double psi_bound = 0.0;  // +inf when lambda == 0.
};

// lambda = 1 - n * eps_min^(diameter * window),
// q = lambda^(1 / (diameter * window + 1)),
// psi_bound = 2 sqrt(d) eps_min^(-diameter * window)
//             / lambda^((diameter * window + 2) / (diameter * window + 1)).
// Fails with "InvalidRegime" when n * eps_min^(diameter * window) > 1.
absl::StatusOr<SpectralConstants> ComputeSpectralConstants(
    std::size_t n, double eps_min, std::size_t window, std::size_t diameter,
    std::size_t dimension);

// Convenience for run headers: smallest window in [1, max_window] that makes
// the schedule B-strongly connected, then the matching spectral constants.
struct ScheduleDiagnostics {
  ConnectivityReport connectivity;
  absl::StatusOr<SpectralConstants> spectral =
      absl::UnknownError("not computed");
};
ScheduleDiagnostics DiagnoseSchedule(const GraphSchedule& schedule,
                                     std::size_t dimension,
                                     std::size_t max_window);

}  // namespace dyndp

#endif  // DYNDP_TOPOLOGY_H_
