#include "pepkit/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pepkit/rng.hpp"

namespace pepkit {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw config_error("learning_rate must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw config_error("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0)) throw config_error("adam epsilon must be positive");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  if (epochs < 1) throw config_error("epochs must be >= 1");
}

AdamState::AdamState(Index dim, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Eigen::VectorXd::Zero(dim)),
      v_(Eigen::VectorXd::Zero(dim)) {}

void AdamState::step(Eigen::VectorXd& params, const Eigen::VectorXd& loss_grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * loss_grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * loss_grad.cwiseProduct(loss_grad);
  const double mhat_scale = 1.0 / (1.0 - std::pow(beta1_, double(t_)));
  const double vhat_scale = 1.0 / (1.0 - std::pow(beta2_, double(t_)));
  params -= lr_ * (mhat_scale * m_.array() /
                   ((vhat_scale * v_.array()).sqrt() + eps_))
                      .matrix();
}

ParamVector he_uniform_init(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params = zeros_like(spec);
  rng::Xoshiro256pp gen(rng::derive_seed(seed, "init"));
  const auto layout = params.layout;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const double limit = std::sqrt(6.0 / double(spec.layers[l].input_width));
    const auto& wseg = layout[2 * l];
    for (Index i = 0; i < wseg.length; ++i) {
      params.values[wseg.offset + i] = (2.0 * gen.uniform() - 1.0) * limit;
    }
    // biases start at zero
  }
  return params;
}

CheckpointSeries train(const NetworkSpec& spec, const Dataset& dataset,
                       const TrainConfig& config) {
  spec.validate();
  config.validate();
  dataset.validate();
  const Dataset train_split = dataset.subset(Split::train);
  const Dataset val_split = dataset.subset(Split::validation);
  if (train_split.n() == 0) throw config_error("dataset has no train split");
  if (val_split.n() == 0) throw config_error("dataset has no validation split");
  if (dataset.dim() != spec.input_width()) {
    throw shape_error("dataset width " + std::to_string(dataset.dim()) +
                      " != network input width " + std::to_string(spec.input_width()));
  }
  if (dataset.class_count != spec.class_count()) {
    throw shape_error("dataset classes != network classes");
  }

  ParamVector params = he_uniform_init(spec, config.seed);
  AdamState adam(params.size(), config.learning_rate, config.beta1, config.beta2,
                 config.epsilon);
  rng::Xoshiro256pp shuffle_gen(rng::derive_seed(config.seed, "shuffle"));

  std::vector<Index> order(static_cast<std::size_t>(train_split.n()));
  std::iota(order.begin(), order.end(), Index{0});

  CheckpointSeries series;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng::shuffle(order, shuffle_gen);
    bool finite = true;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Dataset batch = train_split.subset(rows);
      ParamVector grad;
      try {
        grad = gradient(spec, params, batch.features, batch.labels);
      } catch (const numeric_error&) {
        finite = false;
        break;
      }
      // loss = mean NLL over the batch = -(1/B) * sum ll
      Eigen::VectorXd loss_grad = -grad.values / double(batch.n());
      if (!loss_grad.allFinite()) {
        finite = false;
        break;
      }
      if (config.optimizer == Optimizer::adam) {
        adam.step(params.values, loss_grad);
      } else {
        params.values -= config.learning_rate * loss_grad;
      }
    }
    if (finite && !params.values.allFinite()) finite = false;
    if (!finite) {
      series.diverged_epoch = epoch;
      return series;
    }
    EpochCheckpoint ckpt;
    ckpt.epoch = epoch;
    ckpt.params = params;
    try {
      ckpt.train_nll = -mean_log_likelihood(spec, params, train_split.features, train_split.labels);
      ckpt.val_nll = -mean_log_likelihood(spec, params, val_split.features, val_split.labels);
    } catch (const numeric_error&) {
      series.diverged_epoch = epoch;
      return series;
    }
    series.epochs.push_back(std::move(ckpt));
  }
  return series;
}

double overfit_gap(const NetworkSpec& spec, const ParamVector& params,
                   const Dataset& train_split, const Dataset& test_split) {
  const double train_nll = -mean_log_likelihood(spec, params, train_split.features, train_split.labels);
  const double test_nll = -mean_log_likelihood(spec, params, test_split.features, test_split.labels);
  return test_nll - train_nll;
}

}  // namespace pepkit
