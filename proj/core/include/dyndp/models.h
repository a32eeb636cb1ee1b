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

#ifndef DYNDP_MODELS_H_
#define DYNDP_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace dyndp {

// Labelled samples split evenly across nodes, plus an optional held-out test
// split. Node i owns training rows [i * J, (i + 1) * J).
struct Dataset {
  std::size_t nodes = 0;
  std::size_t per_node = 0;  // J
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;  // row-major, (nodes * J) x input_dim
  std::vector<int> labels;
  std::vector<double> test_features;
  std::vector<int> test_labels;

  std::size_t train_size() const { return labels.size(); }
  std::size_t test_size() const { return test_labels.size(); }
  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * input_dim, input_dim};
  }
  std::span<const double> test_row(std::size_t r) const {
    return {test_features.data() + r * input_dim, input_dim};
  }
  std::size_t RowOf(std::size_t node, std::size_t index) const {
    return node * per_node + index;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t nodes = 4;
  std::size_t per_node = 100;
  std::size_t input_dim = 10;
  std::size_t classes = 2;
  std::size_t test_size = 1000;
  // Distance of each class mean from the origin. Two classes sit at
  // antipodal means, so the Bayes accuracy is Phi(separation).
  double separation = 1.5;
};

// Isotropic unit-variance Gaussian blobs around fixed class means (the means
// do not depend on the seed). Labels are uniform over classes. Samples are
// shuffled, then dealt out J per node.
absl::StatusOr<Dataset> SynthDataset(const SynthOptions& options);

// CSV round trip: '#'-prefixed metadata, header "split,node,label,x0,...",
// one row per sample. Doubles are written with 17 significant digits.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);
absl::StatusOr<Dataset> ReadDatasetCsv(std::istream& in);

enum class ModelKind { kLogistic, kMlp };

absl::string_view ModelKindName(ModelKind kind);
absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name);

// Cross-entropy classifiers with exact per-sample gradients.
//
// kLogistic: binary, parameters [w (input_dim), b], labels {0, 1} mapped to
//   y = -1 / +1, loss log(1 + exp(-y (w.x + b))).
// kMlp: one tanh hidden layer of width h and a softmax output. Parameters
//   are laid out as [W1 (h x input_dim), b1 (h), W2 (classes x h), b2].
class Model {
 public:
  static Model Logistic(std::size_t input_dim);
  static absl::StatusOr<Model> Mlp(std::size_t input_dim, std::size_t hidden,
                                   std::size_t classes);

  ModelKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t classes() const { return classes_; }
  std::size_t dimension() const;

  double SampleLoss(std::span<const double> params,
                    std::span<const double> features, int label) const;
  // Writes the gradient into `grad` (size dimension()) and returns the loss.
  double SampleGradient(std::span<const double> params,
                        std::span<const double> features, int label,
                        std::span<double> grad) const;
  int Predict(std::span<const double> params,
              std::span<const double> features) const;

  // Zeros for logistic; for the MLP, N(0, 1/fan_in) weights and zero biases
  // drawn from `seed` (shared by all nodes).
  std::vector<double> InitialParameters(std::uint64_t seed) const;

 private:
  Model(ModelKind kind, std::size_t input_dim, std::size_t hidden,
        std::size_t classes)
      : kind_(kind), input_dim_(input_dim), hidden_(hidden), classes_(classes) {}

  ModelKind kind_;
  std::size_t input_dim_;
  std::size_t hidden_;
  std::size_t classes_;
};

// Structured view of MLP parameters.
struct MlpParameters {
  std::vector<double> w1, b1, w2, b2;

  static absl::StatusOr<MlpParameters> Unflatten(const Model& model,
                                                 std::span<const double> flat);
  std::vector<double> Flatten() const;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// f(x) = (1/n) sum_i f_i(x) with f_i the mean loss over node i's J samples.
LossAndGradient FullObjective(const Model& model, const Dataset& data,
                              std::span<const double> params);

// Fraction of correctly classified samples; uses the test split when present.
double Accuracy(const Model& model, const Dataset& data,
                std::span<const double> params);
double TrainAccuracy(const Model& model, const Dataset& data,
                     std::span<const double> params);

// Empirical stand-ins for analysis constants that are never measured
// directly: the largest per-sample gradient norm (per-sample bound) and the
// largest ratio |grad f_i(x) - grad f_i(y)| / |x - y| over random pairs near
// `params` (smoothness).
double MaxSampleGradientNorm(const Model& model, const Dataset& data,
                             std::span<const double> params);
double EstimateSmoothness(const Model& model, const Dataset& data,
                          std::span<const double> params, std::uint64_t seed,
                          int pairs, double radius);

// What the training loop needs from a learning task.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t node_count() const = 0;
  virtual std::size_t samples_per_node() const = 0;

  // Gradient of node `node`'s sample `index` at `params`, written to `grad`.
  // Must be safe to call concurrently.
  virtual void SampleGradient(std::size_t node, std::size_t index,
                              std::span<const double> params,
                              std::span<double> grad) const = 0;
  // Global loss; writes the global gradient into `grad`.
  virtual double GlobalLoss(std::span<const double> params,
                            std::span<double> grad) const = 0;
  virtual std::optional<double> Accuracy(std::span<const double>) const {
    return std::nullopt;
  }
};

class ClassificationTask final : public Objective {
 public:
  ClassificationTask(Model model, Dataset data)
      : model_(std::move(model)), data_(std::move(data)) {}

  const Model& model() const { return model_; }
  const Dataset& data() const { return data_; }

  std::size_t dimension() const override { return model_.dimension(); }
  std::size_t node_count() const override { return data_.nodes; }
  std::size_t samples_per_node() const override { return data_.per_node; }
  void SampleGradient(std::size_t node, std::size_t index,
                      std::span<const double> params,
                      std::span<double> grad) const override;
  double GlobalLoss(std::span<const double> params,
                    std::span<double> grad) const override;
  std::optional<double> Accuracy(
      std::span<const double> params) const override;

 private:
  Model model_;
  Dataset data_;
};

}  // namespace dyndp

#endif  // DYNDP_MODELS_H_
