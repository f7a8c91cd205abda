#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "pepkit/data.hpp"
#include "pepkit/nn.hpp"
#include "pepkit/rng.hpp"

namespace testutil {

// Fresh directory under the system temp root; removed by the caller or
// left for inspection on failure.
inline std::filesystem::path tmp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  auto path = std::filesystem::temp_directory_path() /
              ("pepkit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path);
  return path;
}

// Central-difference gradient of the summed log-likelihood; the oracle
// backprop is checked against.
inline Eigen::VectorXd fd_gradient(const pepkit::NetworkSpec& spec,
                                   const pepkit::ParamVector& params,
                                   const pepkit::FeatureMatrix& features,
                                   const std::vector<int>& labels, double h = 1e-5) {
  Eigen::VectorXd grad(params.size());
  pepkit::ParamVector probe = params;
  for (pepkit::Index k = 0; k < params.size(); ++k) {
    probe.values[k] = params.values[k] + h;
    const double up = pepkit::log_likelihoods(spec, probe, features, labels).sum();
    probe.values[k] = params.values[k] - h;
    const double down = pepkit::log_likelihoods(spec, probe, features, labels).sum();
    probe.values[k] = params.values[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Max relative error between gradients, coordinate-wise, with an
// absolute floor so near-zero coordinates compare absolutely.
inline double max_rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < got.size(); ++k) {
    const double denom = std::max(std::abs(want[k]), floor);
    worst = std::max(worst, std::abs(got[k] - want[k]) / denom);
  }
  return worst;
}

inline pepkit::ParamVector random_params(const pepkit::NetworkSpec& spec, std::uint64_t seed,
                                         double scale = 0.5) {
  pepkit::ParamVector params = pepkit::zeros_like(spec);
  pepkit::rng::Xoshiro256pp gen(seed);
  for (pepkit::Index k = 0; k < params.size(); ++k) params.values[k] = scale * gen.gaussian();
  return params;
}

inline std::vector<int> random_labels(pepkit::Index n, int class_count, std::uint64_t seed) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  pepkit::rng::Xoshiro256pp gen(seed);
  for (auto& y : labels) y = static_cast<int>(gen.below(static_cast<std::uint64_t>(class_count)));
  return labels;
}

inline pepkit::FeatureMatrix random_features(pepkit::Index n, pepkit::Index dim,
                                             std::uint64_t seed) {
  pepkit::FeatureMatrix x(n, dim);
  pepkit::rng::Xoshiro256pp gen(seed);
  for (pepkit::Index i = 0; i < n; ++i) {
    for (pepkit::Index j = 0; j < dim; ++j) x(i, j) = gen.gaussian();
  }
  return x;
}

// Small dataset wrapper around random features/labels.
inline pepkit::Dataset random_dataset(pepkit::Index n, pepkit::Index dim, int class_count,
                                      std::uint64_t seed) {
  pepkit::Dataset ds;
  ds.features = random_features(n, dim, seed);
  ds.labels = random_labels(n, class_count, seed ^ 0x5bd1e995u);
  ds.class_count = class_count;
  ds.splits.assign(static_cast<std::size_t>(n), pepkit::Split::none);
  return ds;
}

}  // namespace testutil
