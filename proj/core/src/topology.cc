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

#include "dyndp/topology.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace dyndp {
namespace {

constexpr double kColumnSumTolerance = 1e-12;
// Slack on the lambda >= 0 domain check so that eps_min = 1/n (complete graph)
// is not rejected over a rounding error.
constexpr double kRegimeSlack = 1e-12;

// Sender `from` keeps half of its mass and pushes half to `to`.
void AddHalfSplit(MixingMatrix& p, std::size_t from, std::size_t to) {
  p(from, from) += 0.5;
  p(to, from) += 0.5;
}

// adjacency[i] lists j with a directed edge j -> i, excluding self loops.
using Adjacency = std::vector<std::vector<bool>>;

void AddEdges(const MixingMatrix& p, Adjacency& adjacency) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && p(i, j) > 0.0) adjacency[j][i] = true;
    }
  }
}

// Returns the longest shortest path, or nullopt-like max() when some node is
// unreachable.
std::size_t Diameter(const Adjacency& out) {
  const std::size_t n = out.size();
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::size_t diameter = 0;
  std::vector<std::size_t> dist(n);
  for (std::size_t source = 0; source < n; ++source) {
    std::fill(dist.begin(), dist.end(), kUnreached);
    dist[source] = 0;
    std::queue<std::size_t> frontier;
    frontier.push(source);
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (out[u][v] && dist[v] == kUnreached) {
          dist[v] = dist[u] + 1;
          frontier.push(v);
        }
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (dist[v] == kUnreached) return kUnreached;
      diameter = std::max(diameter, dist[v]);
    }
  }
  return diameter;
}

}  // namespace

absl::StatusOr<MixingMatrix> MixingMatrix::FromRows(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  MixingMatrix p(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      return absl::InvalidArgumentError(
          absl::StrFormat("mixing matrix row %d has %d entries, expected %d", i,
                          rows[i].size(), n));
    }
    for (std::size_t j = 0; j < n; ++j) p(i, j) = rows[i][j];
  }
  return p;
}

MixingMatrix MixingMatrix::Identity(std::size_t n) {
  MixingMatrix p(n);
  for (std::size_t i = 0; i < n; ++i) p(i, i) = 1.0;
  return p;
}

double MixingMatrix::MinNonzeroWeight() const {
  double best = std::numeric_limits<double>::infinity();
  for (double w : weights_) {
    if (w > 0.0) best = std::min(best, w);
  }
  return std::isinf(best) ? 0.0 : best;
}

std::size_t ExponentialGraphPeriod(std::size_t n) {
  if (n <= 2) return 1;
  return static_cast<std::size_t>(std::bit_width(n - 1));
}

MixingMatrix ExponentialGraph(std::size_t n, std::uint64_t k) {
  if (n == 1) return MixingMatrix::Identity(1);
  const std::size_t hop = std::size_t{1} << (k % ExponentialGraphPeriod(n));
  MixingMatrix p(n);
  for (std::size_t i = 0; i < n; ++i) AddHalfSplit(p, i, (i + hop) % n);
  return p;
}

MixingMatrix RingGraph(std::size_t n) {
  if (n == 1) return MixingMatrix::Identity(1);
  MixingMatrix p(n);
  for (std::size_t i = 0; i < n; ++i) AddHalfSplit(p, i, (i + 1) % n);
  return p;
}

MixingMatrix CompleteGraph(std::size_t n) {
  MixingMatrix p(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p(i, j) = w;
  }
  return p;
}

absl::Status ValidateColumnStochastic(const MixingMatrix& p) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(p(i, j) >= 0.0)) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "NegativeWeight: entry (%d, %d) = %.17g", i, j, p(i, j)));
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += p(i, j);
    if (!(std::abs(sum - 1.0) <= kColumnSumTolerance)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "ColumnSumViolation: column %d sums to %.17g", j, sum));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p(i, i) > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("MissingSelfLoop: node %d has diagonal weight %.17g",
                          i, p(i, i)));
    }
  }
  return absl::OkStatus();
}

absl::string_view GraphKindName(GraphKind kind) {
  switch (kind) {
    case GraphKind::kExponential:
      return "exponential";
    case GraphKind::kRing:
      return "ring";
    case GraphKind::kComplete:
      return "complete";
    case GraphKind::kExplicit:
      return "explicit";
  }
  return "unknown";
}

absl::StatusOr<GraphKind> ParseGraphKind(absl::string_view name) {
  for (GraphKind kind : {GraphKind::kExponential, GraphKind::kRing,
                         GraphKind::kComplete, GraphKind::kExplicit}) {
    if (name == GraphKindName(kind)) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown graph '", name, "' (expected exponential, ring, complete or ",
      "explicit)"));
}

GraphSchedule GraphSchedule::Generated(GraphKind kind, std::size_t n) {
  return GraphSchedule(kind, n);
}

absl::StatusOr<GraphSchedule> GraphSchedule::Explicit(
    std::vector<MixingMatrix> matrices) {
  if (matrices.empty()) {
    return absl::InvalidArgumentError("explicit graph schedule is empty");
  }
  const std::size_t n = matrices.front().size();
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    if (matrices[k].size() != n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "explicit matrix %d is %dx%d, expected %dx%d", k, matrices[k].size(),
          matrices[k].size(), n, n));
    }
    if (absl::Status s = ValidateColumnStochastic(matrices[k]); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("explicit matrix ", k, ": ", s.message()));
    }
  }
  GraphSchedule schedule(GraphKind::kExplicit, n);
  schedule.explicit_ = std::move(matrices);
  return schedule;
}

std::size_t GraphSchedule::period() const {
  switch (kind_) {
    case GraphKind::kExponential:
      return ExponentialGraphPeriod(n_);
    case GraphKind::kExplicit:
      return explicit_.size();
    case GraphKind::kRing:
    case GraphKind::kComplete:
      return 1;
  }
  return 1;
}

MixingMatrix GraphSchedule::MatrixAt(std::uint64_t k) const {
  switch (kind_) {
    case GraphKind::kExponential:
      return ExponentialGraph(n_, k);
    case GraphKind::kRing:
      return RingGraph(n_);
    case GraphKind::kComplete:
      return CompleteGraph(n_);
    case GraphKind::kExplicit:
      return explicit_[k % explicit_.size()];
  }
  return MixingMatrix::Identity(n_);
}

double GraphSchedule::MinNonzeroWeight() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < period(); ++k) {
    const double w = MatrixAt(k).MinNonzeroWeight();
    if (w > 0.0) best = std::min(best, w);
  }
  return std::isinf(best) ? 0.0 : best;
}

absl::StatusOr<ConnectivityReport> CheckBStrongConnectivity(
    const GraphSchedule& schedule, std::size_t window) {
  if (window == 0) {
    return absl::InvalidArgumentError("connectivity window B must be >= 1");
  }
  const std::size_t n = schedule.node_count();
  const std::size_t period = schedule.period();
  const std::size_t windows = period / std::gcd(period, window);

  ConnectivityReport report{.is_b_connected = true, .window = window};
  for (std::size_t l = 0; l < windows; ++l) {
    Adjacency out(n, std::vector<bool>(n, false));
    for (std::size_t k = l * window; k < (l + 1) * window; ++k) {
      AddEdges(schedule.MatrixAt(k), out);
    }
    const std::size_t diameter = Diameter(out);
    if (diameter == std::numeric_limits<std::size_t>::max()) {
      report.is_b_connected = false;
      report.diameter = 0;
      return report;
    }
    report.diameter = std::max(report.diameter, diameter);
  }
  return report;
}

absl::StatusOr<SpectralConstants> ComputeSpectralConstants(
    std::size_t n, double eps_min, std::size_t window, std::size_t diameter,
    std::size_t dimension) {
  if (!(eps_min > 0.0 && eps_min <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("eps_min must lie in (0, 1], got %g", eps_min));
  }
  const std::size_t span = diameter * window;
  if (span == 0) {
    return absl::InvalidArgumentError(
        "diameter * window must be >= 1 for spectral constants");
  }
  const double exponent = static_cast<double>(span);
  const double mass = static_cast<double>(n) * std::pow(eps_min, exponent);
  if (mass > 1.0 + kRegimeSlack) {
    return absl::OutOfRangeError(absl::StrFormat(
        "InvalidRegime: n * eps_min^(diameter * window) = %.17g exceeds 1",
        mass));
  }
  SpectralConstants out;
  out.eps_min = eps_min;
  out.lambda = std::max(0.0, 1.0 - mass);
  out.q = std::pow(out.lambda, 1.0 / (exponent + 1.0));
  out.psi_bound = out.lambda > 0.0
                      ? 2.0 * std::sqrt(static_cast<double>(dimension)) *
                            std::pow(eps_min, -exponent) /
                            std::pow(out.lambda,
                                     (exponent + 2.0) / (exponent + 1.0))
                      : std::numeric_limits<double>::infinity();
  return out;
}

ScheduleDiagnostics DiagnoseSchedule(const GraphSchedule& schedule,
                                     std::size_t dimension,
                                     std::size_t max_window) {
  ScheduleDiagnostics diagnostics;
  for (std::size_t b = 1; b <= max_window; ++b) {
    absl::StatusOr<ConnectivityReport> report =
        CheckBStrongConnectivity(schedule, b);
    if (!report.ok()) {
      diagnostics.spectral = report.status();
      return diagnostics;
    }
    diagnostics.connectivity = *report;
    if (report->is_b_connected) {
      diagnostics.spectral = ComputeSpectralConstants(
          schedule.node_count(), schedule.MinNonzeroWeight(), b,
          std::max<std::size_t>(report->diameter, 1), dimension);
      return diagnostics;
    }
  }
  diagnostics.spectral = absl::FailedPreconditionError(absl::StrFormat(
      "schedule is not B-strongly connected for any B <= %d", max_window));
  return diagnostics;
}

}  // namespace dyndp
