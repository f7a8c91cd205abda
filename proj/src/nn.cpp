#include "pepkit/nn.hpp"

#include <cmath>
#include <string>

namespace pepkit {

namespace {

std::string layer_tag(Index layer) { return "layer " + std::to_string(layer); }

Eigen::MatrixXd apply_activation(Activation act, Eigen::MatrixXd values) {
  if (act == Activation::relu) values = values.cwiseMax(0.0);
  return values;
}

// Forward pass keeping every post-activation (activations[0] is the
// input batch) for backprop.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;
};

ForwardTrace traced_forward(const NetworkSpec& spec, const std::vector<LayerParams>& layers,
                            const FeatureMatrix& features) {
  ForwardTrace trace;
  trace.activations.reserve(spec.layers.size() + 1);
  trace.activations.push_back(features);
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    Eigen::MatrixXd pre = trace.activations.back() * layers[l].weights.transpose();
    pre.rowwise() += layers[l].biases.transpose();
    trace.activations.push_back(apply_activation(spec.layers[l].activation, std::move(pre)));
  }
  return trace;
}

Eigen::VectorXd log_likelihoods_from_logits(const LogitMatrix& logits,
                                            const std::vector<int>& labels) {
  Eigen::VectorXd out(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double zmax = logits.row(i).maxCoeff();
    const double lse = zmax + std::log((logits.row(i).array() - zmax).exp().sum());
    out[i] = logits(i, labels[static_cast<std::size_t>(i)]) - lse;
  }
  return out;
}

}  // namespace

void NetworkSpec::validate() const {
  if (layers.empty()) throw config_error("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].input_width < 1 || layers[l].output_width < 1) {
      throw config_error(layer_tag(static_cast<Index>(l)) + " has non-positive width");
    }
    if (l > 0 && layers[l].input_width != layers[l - 1].output_width) {
      throw config_error(layer_tag(static_cast<Index>(l)) + " input width " +
                         std::to_string(layers[l].input_width) + " != previous output width " +
                         std::to_string(layers[l - 1].output_width));
    }
  }
  if (layers.back().activation != Activation::identity) {
    throw config_error("output layer must emit raw logits (identity activation)");
  }
  if (class_count() < 2) throw config_error("classifier needs at least 2 classes");
}

NetworkSpec NetworkSpec::mlp(Index input_width, const std::vector<Index>& hidden_widths,
                             Index class_count) {
  NetworkSpec spec;
  Index in = input_width;
  for (Index h : hidden_widths) {
    spec.layers.push_back({in, h, Activation::relu});
    in = h;
  }
  spec.layers.push_back({in, class_count, Activation::identity});
  spec.validate();
  return spec;
}

std::vector<ParamSegment> param_layout(const NetworkSpec& spec) {
  std::vector<ParamSegment> layout;
  layout.reserve(spec.layers.size() * 2);
  Index offset = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const Index wlen = spec.layers[l].input_width * spec.layers[l].output_width;
    layout.push_back({static_cast<Index>(l), ParamKind::weight, offset, wlen});
    offset += wlen;
    layout.push_back({static_cast<Index>(l), ParamKind::bias, offset, spec.layers[l].output_width});
    offset += spec.layers[l].output_width;
  }
  return layout;
}

Index param_count(const NetworkSpec& spec) {
  Index total = 0;
  for (const auto& layer : spec.layers) {
    total += layer.input_width * layer.output_width + layer.output_width;
  }
  return total;
}

void ParamVector::validate() const {
  Index expected = 0;
  for (const auto& seg : layout) {
    if (seg.offset != expected || seg.length < 0) {
      throw shape_error("parameter layout is not contiguous");
    }
    expected += seg.length;
  }
  if (expected != values.size()) {
    throw shape_error("parameter layout covers " + std::to_string(expected) +
                      " values, vector holds " + std::to_string(values.size()));
  }
  if (!values.allFinite()) throw numeric_error("parameter vector has non-finite entries");
}

ParamVector flatten(const NetworkSpec& spec, const std::vector<LayerParams>& layers) {
  if (layers.size() != spec.layers.size()) {
    throw shape_error("expected " + std::to_string(spec.layers.size()) + " layers, got " +
                      std::to_string(layers.size()));
  }
  ParamVector out;
  out.layout = param_layout(spec);
  out.values.resize(param_count(spec));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ls = spec.layers[l];
    const auto& lp = layers[l];
    if (lp.weights.rows() != ls.output_width || lp.weights.cols() != ls.input_width ||
        lp.biases.size() != ls.output_width) {
      throw shape_error(layer_tag(static_cast<Index>(l)) + " parameter shapes do not match spec");
    }
    const auto& wseg = out.layout[2 * l];
    const auto& bseg = out.layout[2 * l + 1];
    for (Index r = 0; r < ls.output_width; ++r) {
      for (Index c = 0; c < ls.input_width; ++c) {
        out.values[wseg.offset + r * ls.input_width + c] = lp.weights(r, c);
      }
    }
    out.values.segment(bseg.offset, bseg.length) = lp.biases;
  }
  return out;
}

std::vector<LayerParams> unflatten(const NetworkSpec& spec, const ParamVector& params) {
  if (params.size() != param_count(spec)) {
    throw shape_error("parameter vector length " + std::to_string(params.size()) +
                      " != spec parameter count " + std::to_string(param_count(spec)));
  }
  std::vector<LayerParams> layers(spec.layers.size());
  const auto layout = param_layout(spec);
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& ls = spec.layers[l];
    const auto& wseg = layout[2 * l];
    const auto& bseg = layout[2 * l + 1];
    layers[l].weights.resize(ls.output_width, ls.input_width);
    for (Index r = 0; r < ls.output_width; ++r) {
      for (Index c = 0; c < ls.input_width; ++c) {
        layers[l].weights(r, c) = params.values[wseg.offset + r * ls.input_width + c];
      }
    }
    layers[l].biases = params.values.segment(bseg.offset, bseg.length);
  }
  return layers;
}

ParamVector zeros_like(const NetworkSpec& spec) {
  ParamVector out;
  out.layout = param_layout(spec);
  out.values = Eigen::VectorXd::Zero(param_count(spec));
  return out;
}

void check_features(const NetworkSpec& spec, const FeatureMatrix& features) {
  if (features.rows() == 0) throw shape_error("empty feature batch");
  if (features.cols() != spec.input_width()) {
    throw shape_error("features have width " + std::to_string(features.cols()) +
                      ", network expects " + std::to_string(spec.input_width()));
  }
  if (!features.allFinite()) throw numeric_error("features contain non-finite values");
}

void check_labels(const NetworkSpec& spec, const std::vector<int>& labels, Index row_count) {
  if (static_cast<Index>(labels.size()) != row_count) {
    throw shape_error("label count " + std::to_string(labels.size()) + " != example count " +
                      std::to_string(row_count));
  }
  for (int y : labels) {
    if (y < 0 || y >= spec.class_count()) {
      throw data_error("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(spec.class_count()) + ")");
    }
  }
}

void check_params(const NetworkSpec& spec, const ParamVector& params) {
  if (params.size() != param_count(spec)) {
    throw shape_error("parameter vector length " + std::to_string(params.size()) +
                      " != spec parameter count " + std::to_string(param_count(spec)));
  }
}

LogitMatrix forward(const NetworkSpec& spec, const ParamVector& params,
                    const FeatureMatrix& features) {
  check_features(spec, features);
  check_params(spec, params);
  const auto layers = unflatten(spec, params);
  Eigen::MatrixXd h = features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd pre = h * layers[l].weights.transpose();
    pre.rowwise() += layers[l].biases.transpose();
    h = apply_activation(spec.layers[l].activation, std::move(pre));
  }
  if (!h.allFinite()) throw numeric_error("forward pass produced non-finite logits");
  return h;
}

ProbMatrix softmax(const LogitMatrix& logits) {
  ProbMatrix probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double zmax = logits.row(i).maxCoeff();
    probs.row(i) = (logits.row(i).array() - zmax).exp().matrix();
    probs.row(i) /= probs.row(i).sum();
  }
  return probs;
}

Eigen::VectorXd log_likelihoods(const NetworkSpec& spec, const ParamVector& params,
                                const FeatureMatrix& features,
                                const std::vector<int>& labels) {
  const LogitMatrix logits = forward(spec, params, features);
  check_labels(spec, labels, logits.rows());
  return log_likelihoods_from_logits(logits, labels);
}

Eigen::VectorXd log_likelihoods_from_probs(const ProbMatrix& probs,
                                           const std::vector<int>& labels,
                                           bool* floored) {
  if (static_cast<Index>(labels.size()) != probs.rows()) {
    throw shape_error("label count != probability rows");
  }
  bool hit = false;
  Eigen::VectorXd out(probs.rows());
  for (Index i = 0; i < probs.rows(); ++i) {
    double p = probs(i, labels[static_cast<std::size_t>(i)]);
    if (p < kProbFloor) {
      p = kProbFloor;
      hit = true;
    }
    out[i] = std::log(p);
  }
  if (floored) *floored = hit;
  return out;
}

double mean_log_likelihood(const NetworkSpec& spec, const ParamVector& params,
                           const FeatureMatrix& features, const std::vector<int>& labels) {
  return log_likelihoods(spec, params, features, labels).mean();
}

ParamVector gradient(const NetworkSpec& spec, const ParamVector& params,
                     const FeatureMatrix& features, const std::vector<int>& labels) {
  check_features(spec, features);
  check_params(spec, params);
  check_labels(spec, labels, features.rows());
  const auto layers = unflatten(spec, params);
  const ForwardTrace trace = traced_forward(spec, layers, features);
  const Index n = features.rows();

  // d(sum ll)/d(logits) = onehot - softmax, row per example.
  Eigen::MatrixXd delta = -softmax(trace.activations.back());
  for (Index i = 0; i < n; ++i) delta(i, labels[static_cast<std::size_t>(i)]) += 1.0;

  ParamVector grad = zeros_like(spec);
  const auto layout = grad.layout;
  for (std::size_t l = spec.layers.size(); l-- > 0;) {
    const auto& ls = spec.layers[l];
    const Eigen::MatrixXd& below = trace.activations[l];
    Eigen::MatrixXd dw = delta.transpose() * below;  // out x in
    Eigen::VectorXd db = delta.colwise().sum();
    const auto& wseg = layout[2 * l];
    const auto& bseg = layout[2 * l + 1];
    for (Index r = 0; r < ls.output_width; ++r) {
      for (Index c = 0; c < ls.input_width; ++c) {
        grad.values[wseg.offset + r * ls.input_width + c] = dw(r, c);
      }
    }
    grad.values.segment(bseg.offset, bseg.length) = db;
    if (l > 0) {
      delta = delta * layers[l].weights;  // n x in
      if (spec.layers[l - 1].activation == Activation::relu) {
        delta = ((trace.activations[l].array() > 0.0).cast<double>() * delta.array()).matrix();
      }
    }
  }
  return grad;
}

void for_each_example_gradient(const NetworkSpec& spec, const ParamVector& params,
                               const FeatureMatrix& features, const std::vector<int>& labels,
                               const std::function<void(Index, const Eigen::VectorXd&)>& visit) {
  check_features(spec, features);
  check_params(spec, params);
  check_labels(spec, labels, features.rows());
  const auto layers = unflatten(spec, params);
  const ForwardTrace trace = traced_forward(spec, layers, features);
  const ProbMatrix probs = softmax(trace.activations.back());
  const auto layout = param_layout(spec);
  Eigen::VectorXd grad(param_count(spec));
  for (Index i = 0; i < features.rows(); ++i) {
    Eigen::RowVectorXd delta = -probs.row(i);
    delta[labels[static_cast<std::size_t>(i)]] += 1.0;
    for (std::size_t l = spec.layers.size(); l-- > 0;) {
      const auto& ls = spec.layers[l];
      const auto& wseg = layout[2 * l];
      const auto& bseg = layout[2 * l + 1];
      for (Index r = 0; r < ls.output_width; ++r) {
        grad.segment(wseg.offset + r * ls.input_width, ls.input_width) =
            delta[r] * trace.activations[l].row(i).transpose();
      }
      grad.segment(bseg.offset, bseg.length) = delta.transpose();
      if (l > 0) {
        Eigen::RowVectorXd next = delta * layers[l].weights;
        if (spec.layers[l - 1].activation == Activation::relu) {
          next = ((trace.activations[l].row(i).array() > 0.0).cast<double>() * next.array()).matrix();
        }
        delta = std::move(next);
      }
    }
    visit(i, grad);
  }
}

}  // namespace pepkit
