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

#include "dyndp/metrics.h"

#include <algorithm>
#include <limits>

#include "absl/strings/str_format.h"

namespace dyndp {

std::vector<double> AverageIterate(std::span<const NodeState> states) {
  if (states.empty()) return {};
  std::vector<double> mean(states.front().x.size(), 0.0);
  for (const NodeState& s : states) {
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += s.x[j];
  }
  for (double& m : mean) m /= static_cast<double>(states.size());
  return mean;
}

double ConsensusError(std::span<const NodeState> states) {
  if (states.empty()) return 0.0;
  const std::vector<double> mean = AverageIterate(states);
  double total = 0.0;
  for (const NodeState& s : states) {
    for (std::size_t j = 0; j < mean.size(); ++j) {
      const double diff = s.z[j] - mean[j];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(states.size());
}

Summary Summarize(const MetricsLog& log) {
  Summary summary;
  summary.rounds = static_cast<std::int64_t>(log.rows.size());
  summary.final_loss = log.final_state.loss;
  summary.final_accuracy = log.final_state.accuracy;
  if (log.rows.empty()) return summary;
  summary.min_grad_norm_sq = std::numeric_limits<double>::infinity();
  for (const RoundStats& row : log.rows) {
    summary.mean_loss += row.loss;
    summary.mean_grad_norm_sq += row.grad_norm_sq;
    summary.min_grad_norm_sq = std::min(summary.min_grad_norm_sq,
                                        row.grad_norm_sq);
    summary.clipped_fraction += row.clip_rate;
  }
  const double rounds = static_cast<double>(log.rows.size());
  summary.mean_loss /= rounds;
  summary.mean_grad_norm_sq /= rounds;
  summary.clipped_fraction /= rounds;
  return summary;
}

void WriteMetricsCsv(const MetricsLog& log, std::ostream& out) {
  for (const auto& [key, value] : log.header) {
    out << "# " << key << '=' << value << '\n';
  }
  out << kMetricsCsvHeader << '\n';
  for (const RoundStats& row : log.rows) {
    out << absl::StrFormat("%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,",
                           row.k, row.loss, row.grad_norm_sq,
                           row.consensus_error, row.clip_rate, row.clip_bound,
                           row.budget, row.sigma);
    if (row.accuracy.has_value()) out << absl::StrFormat("%.17g", *row.accuracy);
    out << '\n';
  }
}

}  // namespace dyndp
