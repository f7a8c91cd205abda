#include "pepkit/pep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pepkit/rng.hpp"
#include "pepkit/search.hpp"

namespace pepkit {

std::vector<SegmentRef> weight_mask(const NetworkSpec& spec) {
  std::vector<SegmentRef> mask;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    mask.push_back({static_cast<Index>(l), ParamKind::weight});
  }
  return mask;
}

std::vector<SegmentRef> full_mask(const NetworkSpec& spec) {
  std::vector<SegmentRef> mask;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    mask.push_back({static_cast<Index>(l), ParamKind::weight});
    mask.push_back({static_cast<Index>(l), ParamKind::bias});
  }
  return mask;
}

void PerturbConfig::validate(const NetworkSpec& spec) const {
  if (!(sigma >= 0)) throw config_error("sigma must be >= 0");
  if (member_count < 1) throw config_error("member_count must be >= 1");
  if (mask.empty()) throw config_error("perturbation mask is empty");
  for (const auto& ref : mask) {
    if (ref.layer < 0 || ref.layer >= static_cast<Index>(spec.layers.size())) {
      throw config_error("mask names layer " + std::to_string(ref.layer) +
                         " outside the network");
    }
    if (std::count(mask.begin(), mask.end(), ref) != 1) {
      throw config_error("mask lists a segment twice");
    }
  }
}

std::vector<bool> mask_coordinates(const NetworkSpec& spec,
                                   const std::vector<SegmentRef>& mask) {
  std::vector<bool> on(static_cast<std::size_t>(param_count(spec)), false);
  const auto layout = param_layout(spec);
  for (const auto& ref : mask) {
    for (const auto& seg : layout) {
      if (seg.layer == ref.layer && seg.kind == ref.kind) {
        for (Index i = 0; i < seg.length; ++i) {
          on[static_cast<std::size_t>(seg.offset + i)] = true;
        }
      }
    }
  }
  return on;
}

ParamVector sample_member(const NetworkSpec& spec, const ParamVector& theta_star,
                          const PerturbConfig& config, int member_index) {
  config.validate(spec);
  check_params(spec, theta_star);
  if (member_index < 0 || member_index >= config.member_count) {
    throw config_error("member index out of range");
  }
  if (config.sigma == 0.0) return theta_star;

  ParamVector out = theta_star;
  const auto on = mask_coordinates(spec, config.mask);
  const auto j = static_cast<std::uint64_t>(member_index);
  for (std::size_t c = 0; c < on.size(); ++c) {
    if (!on[c]) continue;
    const double unit = (config.distribution == PerturbDistribution::gaussian)
                            ? rng::member_noise_gaussian(config.seed, j, c)
                            : rng::member_noise_uniform(config.seed, j, c);
    out.values[static_cast<Index>(c)] += config.sigma * unit;
  }
  return out;
}

ProbMatrix ensemble_predict(const NetworkSpec& spec, const ParamVector& theta_star,
                            const PerturbConfig& config, const FeatureMatrix& features) {
  config.validate(spec);
  if (config.sigma == 0.0) return softmax(forward(spec, theta_star, features));
  ProbMatrix mean;
  for (int j = 0; j < config.member_count; ++j) {
    const ParamVector theta_j = sample_member(spec, theta_star, config, j);
    const ProbMatrix probs = softmax(forward(spec, theta_j, features));
    if (j == 0) {
      mean = probs;
    } else {
      mean += probs;
    }
  }
  mean /= double(config.member_count);
  return mean;
}

EnsembleLogLik ensemble_log_likelihood(const NetworkSpec& spec, const ParamVector& theta_star,
                                       const PerturbConfig& config,
                                       const FeatureMatrix& features,
                                       const std::vector<int>& labels) {
  config.validate(spec);
  EnsembleLogLik out;
  if (config.sigma == 0.0) {
    const double baseline = mean_log_likelihood(spec, theta_star, features, labels);
    out.ensemble = baseline;
    out.members.assign(static_cast<std::size_t>(config.member_count), baseline);
    return out;
  }
  Eigen::VectorXd mean_label_prob = Eigen::VectorXd::Zero(features.rows());
  out.members.reserve(static_cast<std::size_t>(config.member_count));
  for (int j = 0; j < config.member_count; ++j) {
    const ParamVector theta_j = sample_member(spec, theta_star, config, j);
    const LogitMatrix logits = forward(spec, theta_j, features);
    check_labels(spec, labels, logits.rows());
    const ProbMatrix probs = softmax(logits);
    for (Index i = 0; i < probs.rows(); ++i) {
      mean_label_prob[i] += probs(i, labels[static_cast<std::size_t>(i)]);
    }
    // member trace via log-sum-exp on the logits, not ln(prob)
    Eigen::VectorXd member_ll(logits.rows());
    for (Index i = 0; i < logits.rows(); ++i) {
      const double zmax = logits.row(i).maxCoeff();
      const double lse = zmax + std::log((logits.row(i).array() - zmax).exp().sum());
      member_ll[i] = logits(i, labels[static_cast<std::size_t>(i)]) - lse;
    }
    out.members.push_back(member_ll.mean());
  }
  mean_label_prob /= double(config.member_count);
  double total = 0.0;
  for (Index i = 0; i < mean_label_prob.size(); ++i) {
    double p = mean_label_prob[i];
    if (p < kProbFloor) {
      p = kProbFloor;
      out.floored = true;
    }
    total += std::log(p);
  }
  out.ensemble = total / double(mean_label_prob.size());
  return out;
}

void SigmaSearchConfig::validate() const {
  if (!(sigma_low > 0)) throw config_error("sigma_low must be positive");
  if (!(sigma_low < sigma_high)) throw config_error("sigma search needs sigma_low < sigma_high");
  if (iterations < 1) throw config_error("sigma search needs at least 1 iteration");
  if (member_count < 1) throw config_error("sigma search needs at least 1 member");
}

SigmaSearchResult golden_section_sigma(const NetworkSpec& spec, const ParamVector& theta_star,
                                       const SigmaSearchConfig& search,
                                       const FeatureMatrix& val_features,
                                       const std::vector<int>& val_labels,
                                       PerturbDistribution distribution,
                                       std::vector<SegmentRef> mask) {
  search.validate();
  if (mask.empty()) mask = weight_mask(spec);

  PerturbConfig perturb;
  perturb.member_count = search.member_count;
  perturb.distribution = distribution;
  perturb.mask = std::move(mask);
  perturb.seed = search.seed;

  std::vector<SigmaCurvePoint> evals;
  auto objective = [&](double sigma) {
    perturb.sigma = sigma;
    const EnsembleLogLik ll =
        ensemble_log_likelihood(spec, theta_star, perturb, val_features, val_labels);
    evals.push_back({sigma, ll.ensemble, ll.members});
    return ll.ensemble;
  };

  // Guard evaluation at the bracket's low edge.
  const double ll_low = objective(search.sigma_low);
  (void)ll_low;
  const GoldenResult golden =
      golden_section_max(objective, search.sigma_low, search.sigma_high, search.iterations);

  SigmaSearchResult result;
  result.sigma_star = golden.x_star;
  result.ll_baseline = mean_log_likelihood(spec, theta_star, val_features, val_labels);
  result.ll_at_sigma_star = objective(result.sigma_star);
  evals.pop_back();  // the σ* evaluation is reported separately, not a curve row

  result.no_pep_benefit =
      golden.evaluations[0].value < result.ll_baseline - kNoBenefitTolerance &&
      golden.evaluations[1].value < result.ll_baseline - kNoBenefitTolerance;

  std::stable_sort(evals.begin(), evals.end(),
                   [](const SigmaCurvePoint& a, const SigmaCurvePoint& b) { return a.sigma < b.sigma; });
  for (auto& point : evals) {
    if (!result.curve.points.empty() && result.curve.points.back().sigma == point.sigma) continue;
    result.curve.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace pepkit
