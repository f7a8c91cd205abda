#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pepkit/data.hpp"
#include "pepkit/nn.hpp"

namespace pepkit {

enum class Optimizer : std::uint8_t { sgd = 0, adam = 1 };

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Index batch_size = 128;
  int epochs = 15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochCheckpoint {
  int epoch = 0;  // 1-based
  ParamVector params;
  double train_nll = 0.0;  // mean per example
  double val_nll = 0.0;
};

struct CheckpointSeries {
  std::vector<EpochCheckpoint> epochs;
  // Set when training aborted on a non-finite loss; holds the epoch that
  // failed. Entries cover only completed epochs.
  std::optional<int> diverged_epoch;
};

// Kingma-Ba update with bias correction; minimizes, so feed it the
// gradient of the loss.
class AdamState {
 public:
  AdamState(Index dim, double learning_rate, double beta1, double beta2, double epsilon);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& loss_grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

// Seeded He-uniform weights (limit sqrt(6/fan_in)), zero biases.
ParamVector he_uniform_init(const NetworkSpec& spec, std::uint64_t seed);

// Maximum-likelihood training on the train split, minimizing mean batch
// NLL. Mini-batch order is reshuffled every epoch from the seed stream;
// one checkpoint per epoch with mean train/validation NLL.
CheckpointSeries train(const NetworkSpec& spec, const Dataset& dataset,
                       const TrainConfig& config);

// Mean test NLL minus mean train NLL at the given parameters.
double overfit_gap(const NetworkSpec& spec, const ParamVector& params,
                   const Dataset& train_split, const Dataset& test_split);

}  // namespace pepkit
