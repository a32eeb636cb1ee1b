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

#ifndef DYNDP_METRICS_H_
#define DYNDP_METRICS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dyndp/node_state.h"

namespace dyndp {

// Network average x_bar = (1/n) sum_i x_i.
std::vector<double> AverageIterate(std::span<const NodeState> states);

// (1/n) sum_i |z_i - x_bar|^2.
double ConsensusError(std::span<const NodeState> states);

// One row of a run log. Loss, gradient and accuracy are measured at the
// average iterate x_bar^k before round k updates it.
struct RoundStats {
  std::int64_t k = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;  // |grad f(x_bar^k)|^2
  double consensus_error = 0.0;
  double clip_rate = 0.0;  // fraction of nodes whose sampled gradient had norm > C_k
  double clip_bound = 0.0;
  double budget = 0.0;
  double sigma = 0.0;
  std::optional<double> accuracy;

  // Diagnostics kept in memory only.
  double mean_sample_grad_norm = 0.0;  // mean over nodes, before clipping
  double max_sample_grad_norm = 0.0;
  double weight_sum = 0.0;  // sum_i w_i^k
};

struct MetricsLog {
  // Ordered key/value run metadata, written as leading '#' lines.
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<RoundStats> rows;
  // Evaluated at x_bar^K after the last round (k == K).
  RoundStats final_state;

  void AddHeader(std::string key, std::string value) {
    header.emplace_back(std::move(key), std::move(value));
  }
};

struct Summary {
  std::int64_t rounds = 0;
  double final_loss = 0.0;
  double mean_loss = 0.0;
  double min_grad_norm_sq = 0.0;
  // (1/K) sum_k |grad f(x_bar^k)|^2.
  double mean_grad_norm_sq = 0.0;
  std::optional<double> final_accuracy;
  // Clipped sample gradients over all sampled gradients.
  double clipped_fraction = 0.0;
};

// Final loss/accuracy come from `final_state`; averages run over the rows.
Summary Summarize(const MetricsLog& log);

// Column names of the per-iteration CSV, in order.
inline constexpr const char* kMetricsCsvHeader =
    "k,loss,grad_norm_sq,consensus_err,clip_rate,C_k,mu_k,sigma_k,accuracy";

// '#'-prefixed header lines, the column header, then one row per iteration.
// Numbers use 17 significant digits so equal logs give equal bytes; a missing
// accuracy is an empty cell.
void WriteMetricsCsv(const MetricsLog& log, std::ostream& out);

}  // namespace dyndp

#endif  // DYNDP_METRICS_H_
