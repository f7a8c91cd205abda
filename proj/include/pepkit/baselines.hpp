#pragma once

#include <vector>

#include "pepkit/nn.hpp"

namespace pepkit {

// softmax(logits / T). T=1 is the identity; argmax is preserved for all
// T > 0.
ProbMatrix scale_logits(const LogitMatrix& logits, double temperature);

struct TemperatureFit {
  double t_star = 1.0;
  double val_nll_before = 0.0;  // at T=1
  double val_nll_after = 0.0;   // at t_star
  bool at_bracket_edge = false;
};

struct TemperatureSearchConfig {
  double t_low = 0.05;
  double t_high = 20.0;
  int iterations = 40;

  void validate() const;
};

// Golden-section maximization of validation mean log-likelihood over T.
// Guards: a final 21-point grid scan plus the T=1 evaluation; if either
// beats the bracket optimum it wins, so NLL(T*) <= NLL(1) always.
// T* within ~1% of a bracket end is flagged.
TemperatureFit fit_temperature(const LogitMatrix& val_logits, const std::vector<int>& labels,
                               const TemperatureSearchConfig& config = {});

}  // namespace pepkit
