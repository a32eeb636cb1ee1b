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

#include "dyndp/models.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dyndp/rng.h"

namespace dyndp {
namespace {

// Class means come from their own fixed stream so every seed shares them.
constexpr std::uint64_t kClassMeanKey = 0x5eed0fc1a55e5ULL;

double Dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

// log(1 + e^t) without overflow.
double Softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::vector<std::vector<double>> ClassMeans(const SynthOptions& options) {
  std::vector<std::vector<double>> means(
      options.classes, std::vector<double>(options.input_dim, 0.0));
  CounterRng rng(kClassMeanKey);
  for (std::size_t c = 0; c < options.classes; ++c) {
    if (options.classes == 2 && c == 1) {
      for (std::size_t j = 0; j < options.input_dim; ++j) {
        means[1][j] = -means[0][j];
      }
      break;
    }
    for (double& m : means[c]) m = rng.Gaussian();
    const double norm = Norm(means[c]);
    for (double& m : means[c]) m *= options.separation / norm;
  }
  return means;
}

void DrawSamples(const SynthOptions& options,
                 const std::vector<std::vector<double>>& means,
                 std::size_t count, CounterRng& rng,
                 std::vector<double>& features, std::vector<int>& labels) {
  features.resize(count * options.input_dim);
  labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const auto label = static_cast<int>(rng.UniformIndex(options.classes));
    labels[r] = label;
    for (std::size_t j = 0; j < options.input_dim; ++j) {
      features[r * options.input_dim + j] = means[label][j] + rng.Gaussian();
    }
  }
}

// Per-sample forward/backward pass of the MLP. `grad` may be empty to skip
// the backward pass. Returns the loss.
double MlpPass(const Model& model, std::span<const double> params,
               std::span<const double> x, int label, std::span<double> grad,
               int* predicted) {
  const std::size_t in = model.input_dim();
  const std::size_t h = model.hidden();
  const std::size_t c = model.classes();
  const double* w1 = params.data();
  const double* b1 = w1 + h * in;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;

  std::vector<double> hidden(h);
  for (std::size_t u = 0; u < h; ++u) {
    double a = b1[u];
    for (std::size_t j = 0; j < in; ++j) a += w1[u * in + j] * x[j];
    hidden[u] = std::tanh(a);
  }
  std::vector<double> logits(c);
  for (std::size_t k = 0; k < c; ++k) {
    double o = b2[k];
    for (std::size_t u = 0; u < h; ++u) o += w2[k * h + u] * hidden[u];
    logits[k] = o;
  }
  const auto arg_max = std::max_element(logits.begin(), logits.end());
  if (predicted != nullptr) {
    *predicted = static_cast<int>(arg_max - logits.begin());
  }
  const double top = *arg_max;
  double z = 0.0;
  for (double o : logits) z += std::exp(o - top);
  const double log_z = top + std::log(z);
  const double loss = log_z - logits[label];
  if (grad.empty()) return loss;

  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * in;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + c * h;
  std::vector<double> d_hidden(h, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const double d_out =
        std::exp(logits[k] - log_z) - (static_cast<int>(k) == label ? 1.0 : 0.0);
    g_b2[k] = d_out;
    for (std::size_t u = 0; u < h; ++u) {
      g_w2[k * h + u] = d_out * hidden[u];
      d_hidden[u] += w2[k * h + u] * d_out;
    }
  }
  for (std::size_t u = 0; u < h; ++u) {
    const double d_pre = d_hidden[u] * (1.0 - hidden[u] * hidden[u]);
    g_b1[u] = d_pre;
    for (std::size_t j = 0; j < in; ++j) g_w1[u * in + j] = d_pre * x[j];
  }
  return loss;
}

}  // namespace

absl::StatusOr<Dataset> SynthDataset(const SynthOptions& options) {
  if (options.nodes < 1 || options.per_node < 1 || options.input_dim < 1 ||
      options.classes < 2) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "dataset needs nodes, J, input_dim >= 1 and classes >= 2 (got %d, %d, "
        "%d, %d)",
        options.nodes, options.per_node, options.input_dim, options.classes));
  }
  if (!(options.separation >= 0.0)) {
    return absl::InvalidArgumentError("separation must be non-negative");
  }
  const auto means = ClassMeans(options);
  const std::size_t total = options.nodes * options.per_node;

  Dataset data;
  data.nodes = options.nodes;
  data.per_node = options.per_node;
  data.input_dim = options.input_dim;
  data.classes = options.classes;

  CounterRng train_rng(options.seed, 0, StreamPurpose::kData);
  std::vector<double> features;
  std::vector<int> labels;
  DrawSamples(options, means, total, train_rng, features, labels);

  // Fisher-Yates over row indices, then deal out contiguously.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t r = total; r > 1; --r) {
    std::swap(order[r - 1], order[train_rng.UniformIndex(r)]);
  }
  data.features.resize(features.size());
  data.labels.resize(total);
  for (std::size_t r = 0; r < total; ++r) {
    const std::size_t src = order[r];
    std::copy_n(features.begin() + src * options.input_dim, options.input_dim,
                data.features.begin() + r * options.input_dim);
    data.labels[r] = labels[src];
  }

  CounterRng test_rng(options.seed, 1, StreamPurpose::kData);
  DrawSamples(options, means, options.test_size, test_rng, data.test_features,
              data.test_labels);
  return data;
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  out << absl::StrFormat("# nodes=%d\n# per_node=%d\n# input_dim=%d\n",
                         data.nodes, data.per_node, data.input_dim);
  out << absl::StrFormat("# classes=%d\n", data.classes);
  out << "split,node,label";
  for (std::size_t j = 0; j < data.input_dim; ++j) out << ",x" << j;
  out << '\n';
  auto write_row = [&](absl::string_view split, std::size_t node, int label,
                       std::span<const double> x) {
    out << split << ',' << node << ',' << label;
    for (double v : x) out << absl::StrFormat(",%.17g", v);
    out << '\n';
  };
  for (std::size_t r = 0; r < data.train_size(); ++r) {
    write_row("train", r / data.per_node, data.labels[r], data.row(r));
  }
  for (std::size_t r = 0; r < data.test_size(); ++r) {
    write_row("test", 0, data.test_labels[r], data.test_row(r));
  }
}

absl::StatusOr<Dataset> ReadDatasetCsv(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto error = [&](absl::string_view what) {
    return absl::InvalidArgumentError(
        absl::StrCat("dataset csv line ", line_no, ": ", what));
  };
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view view = line;
    if (view.empty()) continue;
    if (absl::ConsumePrefix(&view, "#")) {
      std::vector<absl::string_view> kv =
          absl::StrSplit(absl::StripAsciiWhitespace(view), '=');
      std::size_t value = 0;
      if (kv.size() != 2 || !absl::SimpleAtoi(kv[1], &value)) {
        return error("malformed metadata");
      }
      if (kv[0] == "nodes") {
        data.nodes = value;
      } else if (kv[0] == "per_node") {
        data.per_node = value;
      } else if (kv[0] == "input_dim") {
        data.input_dim = value;
      } else if (kv[0] == "classes") {
        data.classes = value;
      } else {
        return error(absl::StrCat("unknown metadata key '", kv[0], "'"));
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<absl::string_view> cells = absl::StrSplit(view, ',');
    if (cells.size() != 3 + data.input_dim) {
      return error(absl::StrFormat("expected %d cells, found %d",
                                   3 + data.input_dim, cells.size()));
    }
    int label = 0;
    if (!absl::SimpleAtoi(cells[2], &label) || label < 0 ||
        static_cast<std::size_t>(label) >= data.classes) {
      return error("bad label");
    }
    const bool train = cells[0] == "train";
    if (!train && cells[0] != "test") return error("split must be train/test");
    auto& features = train ? data.features : data.test_features;
    (train ? data.labels : data.test_labels).push_back(label);
    for (std::size_t j = 0; j < data.input_dim; ++j) {
      double v = 0.0;
      if (!absl::SimpleAtod(cells[3 + j], &v)) return error("bad feature");
      features.push_back(v);
    }
  }
  if (data.train_size() != data.nodes * data.per_node) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "dataset csv holds %d training rows, metadata implies %d",
        data.train_size(), data.nodes * data.per_node));
  }
  return data;
}

absl::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "mlp";
}

absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown model '", name, "' (expected logistic or mlp)"));
}

Model Model::Logistic(std::size_t input_dim) {
  return Model(ModelKind::kLogistic, input_dim, 0, 2);
}

absl::StatusOr<Model> Model::Mlp(std::size_t input_dim, std::size_t hidden,
                                 std::size_t classes) {
  if (input_dim < 1 || hidden < 1 || classes < 2) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "mlp needs input_dim, hidden >= 1 and classes >= 2 (got %d, %d, %d)",
        input_dim, hidden, classes));
  }
  return Model(ModelKind::kMlp, input_dim, hidden, classes);
}

std::size_t Model::dimension() const {
  if (kind_ == ModelKind::kLogistic) return input_dim_ + 1;
  return hidden_ * input_dim_ + hidden_ + classes_ * hidden_ + classes_;
}

double Model::SampleLoss(std::span<const double> params,
                         std::span<const double> features, int label) const {
  if (kind_ == ModelKind::kLogistic) {
    const double y = label == 1 ? 1.0 : -1.0;
    const double score = Dot(params.first(input_dim_), features) +
                         params[input_dim_];
    return Softplus(-y * score);
  }
  return MlpPass(*this, params, features, label, {}, nullptr);
}

double Model::SampleGradient(std::span<const double> params,
                             std::span<const double> features, int label,
                             std::span<double> grad) const {
  if (kind_ == ModelKind::kLogistic) {
    const double y = label == 1 ? 1.0 : -1.0;
    const double margin =
        y * (Dot(params.first(input_dim_), features) + params[input_dim_]);
    const double scale = -y * Sigmoid(-margin);
    for (std::size_t j = 0; j < input_dim_; ++j) grad[j] = scale * features[j];
    grad[input_dim_] = scale;
    return Softplus(-margin);
  }
  return MlpPass(*this, params, features, label, grad, nullptr);
}

int Model::Predict(std::span<const double> params,
                   std::span<const double> features) const {
  if (kind_ == ModelKind::kLogistic) {
    return Dot(params.first(input_dim_), features) + params[input_dim_] > 0.0
               ? 1
               : 0;
  }
  int predicted = 0;
  MlpPass(*this, params, features, 0, {}, &predicted);
  return predicted;
}

std::vector<double> Model::InitialParameters(std::uint64_t seed) const {
  std::vector<double> params(dimension(), 0.0);
  if (kind_ == ModelKind::kLogistic) return params;
  CounterRng rng(seed, 0, StreamPurpose::kInit);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
  double* w1 = params.data();
  double* w2 = w1 + hidden_ * input_dim_ + hidden_;
  for (std::size_t i = 0; i < hidden_ * input_dim_; ++i) {
    w1[i] = in_scale * rng.Gaussian();
  }
  for (std::size_t i = 0; i < classes_ * hidden_; ++i) {
    w2[i] = hidden_scale * rng.Gaussian();
  }
  return params;
}

absl::StatusOr<MlpParameters> MlpParameters::Unflatten(
    const Model& model, std::span<const double> flat) {
  if (model.kind() != ModelKind::kMlp || flat.size() != model.dimension()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "cannot unflatten %d values into an mlp of dimension %d", flat.size(),
        model.dimension()));
  }
  const std::size_t in = model.input_dim();
  const std::size_t h = model.hidden();
  const std::size_t c = model.classes();
  MlpParameters p;
  auto take = [&flat](std::size_t count) {
    std::vector<double> out(flat.begin(), flat.begin() + count);
    flat = flat.subspan(count);
    return out;
  };
  p.w1 = take(h * in);
  p.b1 = take(h);
  p.w2 = take(c * h);
  p.b2 = take(c);
  return p;
}

std::vector<double> MlpParameters::Flatten() const {
  std::vector<double> flat;
  flat.reserve(w1.size() + b1.size() + w2.size() + b2.size());
  for (const auto* part : {&w1, &b1, &w2, &b2}) {
    flat.insert(flat.end(), part->begin(), part->end());
  }
  return flat;
}

LossAndGradient FullObjective(const Model& model, const Dataset& data,
                              std::span<const double> params) {
  const std::size_t d = model.dimension();
  LossAndGradient out{.loss = 0.0, .gradient = std::vector<double>(d, 0.0)};
  std::vector<double> local(d);
  std::vector<double> sample(d);
  const double per_node = static_cast<double>(data.per_node);
  for (std::size_t node = 0; node < data.nodes; ++node) {
    std::fill(local.begin(), local.end(), 0.0);
    double local_loss = 0.0;
    for (std::size_t s = 0; s < data.per_node; ++s) {
      const std::size_t r = data.RowOf(node, s);
      local_loss += model.SampleGradient(params, data.row(r), data.labels[r],
                                         sample);
      for (std::size_t j = 0; j < d; ++j) local[j] += sample[j];
    }
    out.loss += local_loss / per_node;
    for (std::size_t j = 0; j < d; ++j) out.gradient[j] += local[j] / per_node;
  }
  const double nodes = static_cast<double>(data.nodes);
  out.loss /= nodes;
  for (double& g : out.gradient) g /= nodes;
  return out;
}

double TrainAccuracy(const Model& model, const Dataset& data,
                     std::span<const double> params) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.train_size(); ++r) {
    if (model.Predict(params, data.row(r)) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.train_size());
}

double Accuracy(const Model& model, const Dataset& data,
                std::span<const double> params) {
  if (data.test_size() == 0) return TrainAccuracy(model, data, params);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.test_size(); ++r) {
    if (model.Predict(params, data.test_row(r)) == data.test_labels[r]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.test_size());
}

double MaxSampleGradientNorm(const Model& model, const Dataset& data,
                             std::span<const double> params) {
  std::vector<double> grad(model.dimension());
  double best = 0.0;
  for (std::size_t r = 0; r < data.train_size(); ++r) {
    model.SampleGradient(params, data.row(r), data.labels[r], grad);
    best = std::max(best, Norm(grad));
  }
  return best;
}

double EstimateSmoothness(const Model& model, const Dataset& data,
                          std::span<const double> params, std::uint64_t seed,
                          int pairs, double radius) {
  const std::size_t d = model.dimension();
  CounterRng rng(seed, 0, StreamPurpose::kInit);
  std::vector<double> x(d), y(d), gx(d), gy(d), sample(d);
  auto local_gradient = [&](std::size_t node, std::span<const double> at,
                            std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t s = 0; s < data.per_node; ++s) {
      const std::size_t r = data.RowOf(node, s);
      model.SampleGradient(at, data.row(r), data.labels[r], sample);
      for (std::size_t j = 0; j < d; ++j) out[j] += sample[j];
    }
    for (double& g : out) g /= static_cast<double>(data.per_node);
  };
  double best = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const std::size_t node = rng.UniformIndex(data.nodes);
    double dist_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = params[j] + radius * rng.Gaussian();
      y[j] = params[j] + radius * rng.Gaussian();
      dist_sq += (x[j] - y[j]) * (x[j] - y[j]);
    }
    local_gradient(node, x, gx);
    local_gradient(node, y, gy);
    double diff_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      diff_sq += (gx[j] - gy[j]) * (gx[j] - gy[j]);
    }
    if (dist_sq > 0.0) best = std::max(best, std::sqrt(diff_sq / dist_sq));
  }
  return best;
}

void ClassificationTask::SampleGradient(std::size_t node, std::size_t index,
                                        std::span<const double> params,
                                        std::span<double> grad) const {
  const std::size_t r = data_.RowOf(node, index);
  model_.SampleGradient(params, data_.row(r), data_.labels[r], grad);
}

double ClassificationTask::GlobalLoss(std::span<const double> params,
                                      std::span<double> grad) const {
  LossAndGradient full = FullObjective(model_, data_, params);
  std::copy(full.gradient.begin(), full.gradient.end(), grad.begin());
  return full.loss;
}

std::optional<double> ClassificationTask::Accuracy(
    std::span<const double> params) const {
  return dyndp::Accuracy(model_, data_, params);
}

}  // namespace dyndp
