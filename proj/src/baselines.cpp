#include "pepkit/baselines.hpp"

#include <cmath>

#include "pepkit/metrics.hpp"
#include "pepkit/search.hpp"

namespace pepkit {

ProbMatrix scale_logits(const LogitMatrix& logits, double temperature) {
  if (!(temperature > 0)) throw config_error("temperature must be positive");
  if (!logits.allFinite()) throw numeric_error("logits contain non-finite values");
  return softmax(logits / temperature);
}

void TemperatureSearchConfig::validate() const {
  if (!(t_low > 0 && t_low < t_high)) throw config_error("temperature bracket must satisfy 0 < low < high");
  if (iterations < 1) throw config_error("temperature search needs at least 1 iteration");
}

namespace {

// Mean ln p_{y} of temperature-scaled logits, via log-sum-exp.
double scaled_mean_ll(const LogitMatrix& logits, const std::vector<int>& labels, double t) {
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const Eigen::RowVectorXd z = logits.row(i) / t;
    const double zmax = z.maxCoeff();
    const double lse = zmax + std::log((z.array() - zmax).exp().sum());
    total += z[labels[static_cast<std::size_t>(i)]] - lse;
  }
  return total / double(logits.rows());
}

}  // namespace

TemperatureFit fit_temperature(const LogitMatrix& val_logits, const std::vector<int>& labels,
                               const TemperatureSearchConfig& config) {
  config.validate();
  if (val_logits.rows() == 0) throw config_error("fit_temperature on empty validation set");
  if (static_cast<Index>(labels.size()) != val_logits.rows()) {
    throw shape_error("label count != logit rows");
  }

  auto objective = [&](double t) { return scaled_mean_ll(val_logits, labels, t); };

  const GoldenResult golden =
      golden_section_max(objective, config.t_low, config.t_high, config.iterations);
  double best_t = golden.x_star;
  double best_ll = objective(best_t);

  // Grid guard against a mislocated bracket, plus the T=1 guarantee.
  for (int g = 0; g <= 20; ++g) {
    const double t = config.t_low + (config.t_high - config.t_low) * double(g) / 20.0;
    const double ll = objective(t);
    if (ll > best_ll) {
      best_ll = ll;
      best_t = t;
    }
  }
  const double ll_unit = objective(1.0);
  if (config.t_low <= 1.0 && 1.0 <= config.t_high && ll_unit > best_ll) {
    best_ll = ll_unit;
    best_t = 1.0;
  }

  TemperatureFit fit;
  fit.t_star = best_t;
  fit.val_nll_before = -ll_unit;
  fit.val_nll_after = -best_ll;
  const double span = config.t_high - config.t_low;
  fit.at_bracket_edge =
      best_t <= config.t_low + 0.01 * span || best_t >= config.t_high - 0.01 * span;
  return fit;
}

}  // namespace pepkit
