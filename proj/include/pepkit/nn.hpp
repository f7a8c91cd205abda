#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "pepkit/errors.hpp"

namespace pepkit {

using Index = Eigen::Index;

// Rows are examples. Logits are unnormalized; probabilities are rows on
// the simplex.
using FeatureMatrix = Eigen::MatrixXd;
using LogitMatrix = Eigen::MatrixXd;
using ProbMatrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

struct LayerSpec {
  Index input_width = 0;
  Index output_width = 0;
  Activation activation = Activation::identity;
};

// Feed-forward softmax classifier: affine layers with relu/identity
// activations, final layer emits logits.
struct NetworkSpec {
  std::vector<LayerSpec> layers;

  Index input_width() const { return layers.empty() ? 0 : layers.front().input_width; }
  Index class_count() const { return layers.empty() ? 0 : layers.back().output_width; }

  // Throws config_error on empty/mismatched layers, class_count < 2, or
  // a non-identity output activation.
  void validate() const;

  static NetworkSpec mlp(Index input_width, const std::vector<Index>& hidden_widths,
                         Index class_count);
};

enum class ParamKind : std::uint8_t { weight = 0, bias = 1 };

// One contiguous piece of the flat parameter vector.
struct ParamSegment {
  Index layer = 0;
  ParamKind kind = ParamKind::weight;
  Index offset = 0;
  Index length = 0;
};

// Fixed layout: layer 0 weights (row-major, out x in), layer 0 biases,
// layer 1 weights, ... This ordering is part of the checkpoint format.
std::vector<ParamSegment> param_layout(const NetworkSpec& spec);
Index param_count(const NetworkSpec& spec);

struct LayerParams {
  Eigen::MatrixXd weights;  // output_width x input_width
  Eigen::VectorXd biases;   // output_width
};

// All parameters of a network as one flat vector plus its layout.
struct ParamVector {
  Eigen::VectorXd values;
  std::vector<ParamSegment> layout;

  Index size() const { return values.size(); }
  // Throws shape_error on layout/size mismatch, numeric_error on
  // non-finite entries.
  void validate() const;
};

ParamVector flatten(const NetworkSpec& spec, const std::vector<LayerParams>& layers);
std::vector<LayerParams> unflatten(const NetworkSpec& spec, const ParamVector& params);

ParamVector zeros_like(const NetworkSpec& spec);

LogitMatrix forward(const NetworkSpec& spec, const ParamVector& params,
                    const FeatureMatrix& features);

// Row-wise, max-subtracted.
ProbMatrix softmax(const LogitMatrix& logits);

// Per-example log p(label); computed from logits via log-sum-exp, never
// through the probabilities.
Eigen::VectorXd log_likelihoods(const NetworkSpec& spec, const ParamVector& params,
                                const FeatureMatrix& features,
                                const std::vector<int>& labels);

// Probabilities below this are clamped before any log. Keeps metrics
// finite when an ensemble average assigns (numerically) zero mass.
inline constexpr double kProbFloor = 1e-300;

// log of the label-column of an existing probability matrix, floored at
// kProbFloor. `floored` (optional) reports whether the floor was hit.
Eigen::VectorXd log_likelihoods_from_probs(const ProbMatrix& probs,
                                           const std::vector<int>& labels,
                                           bool* floored = nullptr);

double mean_log_likelihood(const NetworkSpec& spec, const ParamVector& params,
                           const FeatureMatrix& features, const std::vector<int>& labels);

// Gradient of the summed log-likelihood over the batch.
ParamVector gradient(const NetworkSpec& spec, const ParamVector& params,
                     const FeatureMatrix& features, const std::vector<int>& labels);

// Streams the gradient of each example's log-likelihood. One backward
// pass per example off a shared forward pass.
void for_each_example_gradient(const NetworkSpec& spec, const ParamVector& params,
                               const FeatureMatrix& features, const std::vector<int>& labels,
                               const std::function<void(Index, const Eigen::VectorXd&)>& visit);

void check_features(const NetworkSpec& spec, const FeatureMatrix& features);
void check_labels(const NetworkSpec& spec, const std::vector<int>& labels, Index row_count);
void check_params(const NetworkSpec& spec, const ParamVector& params);

}  // namespace pepkit
