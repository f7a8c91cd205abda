#include "pepkit/curvature.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pepkit/rng.hpp"

namespace pepkit {

double default_fd_step(const Eigen::VectorXd& x) {
  const double scale = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  return 1e-4 * std::max(1.0, scale);
}

double taylor_expectation(const ScalarField& f, const Eigen::VectorXd& mu, double sigma,
                          double h) {
  if (!(sigma >= 0)) throw config_error("sigma must be >= 0");
  if (h <= 0) h = default_fd_step(mu);
  const double f0 = f(mu);
  if (!std::isfinite(f0)) throw numeric_error("f(mu) is non-finite");
  double laplacian = 0.0;
  Eigen::VectorXd probe = mu;
  for (Index k = 0; k < mu.size(); ++k) {
    probe[k] = mu[k] + h;
    const double fp = f(probe);
    probe[k] = mu[k] - h;
    const double fm = f(probe);
    probe[k] = mu[k];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw numeric_error("finite-difference probe non-finite at coordinate " +
                          std::to_string(k));
    }
    laplacian += (fp - 2.0 * f0 + fm) / (h * h);
  }
  return f0 + 0.5 * sigma * sigma * laplacian;
}

McEstimate mc_expectation(const ScalarField& f, const Eigen::VectorXd& mu, double sigma,
                          int samples, std::uint64_t seed) {
  if (!(sigma >= 0)) throw config_error("sigma must be >= 0");
  if (sigma == 0.0) return {f(mu), 0.0};
  if (samples < 2) throw config_error("mc_expectation needs at least 2 samples");
  rng::Xoshiro256pp gen(seed);
  Eigen::VectorXd x(mu.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (Index k = 0; k < mu.size(); ++k) x[k] = mu[k] + sigma * gen.gaussian();
    const double v = f(x);
    if (!std::isfinite(v)) throw numeric_error("mc_expectation probe non-finite");
    sum += v;
    sum_sq += v * v;
  }
  const double n = double(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

void CurvatureOptions::validate() const {
  if (hutchinson_probes < 2) throw config_error("hutchinson_probes must be >= 2");
  if (exact_threshold < 1) throw config_error("exact_threshold must be >= 1");
}

namespace {

void check_probe_size(const NetworkSpec& spec, const ParamVector& params) {
  check_params(spec, params);
  if (params.size() > kMaxCurvatureParams) {
    throw config_error("model has " + std::to_string(params.size()) +
                       " parameters; curvature probes are limited to " +
                       std::to_string(kMaxCurvatureParams));
  }
}

double summed_ll(const NetworkSpec& spec, const ParamVector& params, const Dataset& data) {
  return log_likelihoods(spec, params, data.features, data.labels).sum();
}

// Noise floor of a central second difference of a quantity of size
// |base|: a few ulps survive the cancellation.
bool below_noise_floor(double second_difference, double base) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::abs(second_difference) < 8.0 * eps * std::max(1.0, std::abs(base));
}

Eigen::VectorXd rademacher(Index dim, rng::Xoshiro256pp& gen) {
  Eigen::VectorXd v(dim);
  for (Index k = 0; k < dim; ++k) v[k] = (gen.next() >> 63) ? 1.0 : -1.0;
  return v;
}

}  // namespace

CurvatureEstimate laplacian_loglik(const NetworkSpec& spec, const ParamVector& params,
                                   const Dataset& data, const CurvatureOptions& options) {
  options.validate();
  check_probe_size(spec, params);
  const double h = options.h > 0 ? options.h : default_fd_step(params.values);
  const Index p = params.size();

  CurvatureEstimate est;
  est.h = h;
  if (p <= options.exact_threshold) {
    est.method = "exact";
    const double base = summed_ll(spec, params, data);
    ParamVector probe = params;
    double acc = 0.0;
    bool all_noise = true;
    for (Index k = 0; k < p; ++k) {
      probe.values[k] = params.values[k] + h;
      const double lp = summed_ll(spec, probe, data);
      probe.values[k] = params.values[k] - h;
      const double lm = summed_ll(spec, probe, data);
      probe.values[k] = params.values[k];
      const double diff = lp - 2.0 * base + lm;
      if (!below_noise_floor(diff, base)) all_noise = false;
      acc += diff / (h * h);
    }
    est.value = acc;
    est.conditioning_warning = all_noise;
    return est;
  }

  est.method = "hutchinson";
  est.probe_count = options.hutchinson_probes;
  rng::Xoshiro256pp gen(rng::derive_seed(options.seed, "hutchinson"));
  ParamVector shifted = params;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < options.hutchinson_probes; ++s) {
    const Eigen::VectorXd v = rademacher(p, gen);
    shifted.values = params.values + h * v;
    const Eigen::VectorXd gp = gradient(spec, shifted, data.features, data.labels).values;
    shifted.values = params.values - h * v;
    const Eigen::VectorXd gm = gradient(spec, shifted, data.features, data.labels).values;
    const double quad = (gp - gm).dot(v) / (2.0 * h);  // vᵀHv
    sum += quad;
    sum_sq += quad * quad;
  }
  const double n = double(options.hutchinson_probes);
  est.value = sum / n;
  const double var = std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0));
  est.standard_error = std::sqrt(var / n);
  return est;
}

double fisher_trace(const NetworkSpec& spec, const ParamVector& params, const Dataset& data) {
  double total = 0.0;
  for_each_example_gradient(spec, params, data.features, data.labels,
                            [&](Index, const Eigen::VectorXd& g) { total += g.squaredNorm(); });
  return total;
}

double pep_effect_predicted(double laplacian, double fisher_trace, double sigma) {
  if (!(sigma >= 0)) throw config_error("sigma must be >= 0");
  return 0.5 * sigma * sigma * (laplacian + fisher_trace);
}

Eigen::VectorXd per_example_laplacian_ratio(const NetworkSpec& spec, const ParamVector& params,
                                            const Dataset& data, double h) {
  check_probe_size(spec, params);
  if (params.size() > 300) {
    throw config_error("ratio-form per-example Laplacian is exact-loop only (P <= 300); "
                       "use the log-reformulated form for larger models");
  }
  if (h <= 0) h = default_fd_step(params.values);
  const Eigen::VectorXd base = log_likelihoods(spec, params, data.features, data.labels);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(data.n());
  ParamVector probe = params;
  for (Index k = 0; k < params.size(); ++k) {
    probe.values[k] = params.values[k] + h;
    const Eigen::VectorXd lp = log_likelihoods(spec, probe, data.features, data.labels);
    probe.values[k] = params.values[k] - h;
    const Eigen::VectorXd lm = log_likelihoods(spec, probe, data.features, data.labels);
    probe.values[k] = params.values[k];
    // (L(θ+h) + L(θ−h) − 2L(θ)) / (h² L(θ)), with L ratios taken through
    // exp(Δ log L) so tiny likelihoods cannot underflow.
    acc.array() += ((lp - base).array().exp() + (lm - base).array().exp() - 2.0) / (h * h);
  }
  return acc;
}

Eigen::VectorXd per_example_laplacian_log(const NetworkSpec& spec, const ParamVector& params,
                                          const Dataset& data, double h) {
  check_probe_size(spec, params);
  if (params.size() > 300) {
    throw config_error("per-example coordinate loop is limited to P <= 300");
  }
  if (h <= 0) h = default_fd_step(params.values);
  const Eigen::VectorXd base = log_likelihoods(spec, params, data.features, data.labels);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(data.n());
  ParamVector probe = params;
  for (Index k = 0; k < params.size(); ++k) {
    probe.values[k] = params.values[k] + h;
    const Eigen::VectorXd lp = log_likelihoods(spec, probe, data.features, data.labels);
    probe.values[k] = params.values[k] - h;
    const Eigen::VectorXd lm = log_likelihoods(spec, probe, data.features, data.labels);
    probe.values[k] = params.values[k];
    acc.array() += (lp.array() - 2.0 * base.array() + lm.array()) / (h * h);
  }
  return acc;
}

Eigen::VectorXd per_example_grad_sq_norm(const NetworkSpec& spec, const ParamVector& params,
                                         const Dataset& data) {
  Eigen::VectorXd out(data.n());
  for_each_example_gradient(spec, params, data.features, data.labels,
                            [&](Index i, const Eigen::VectorXd& g) { out[i] = g.squaredNorm(); });
  return out;
}

CurvatureEstimate pep_effect_direct(const NetworkSpec& spec, const ParamVector& params,
                                    const Dataset& data, double sigma,
                                    const CurvatureOptions& options, LaplacianForm form) {
  if (!(sigma >= 0)) throw config_error("sigma must be >= 0");
  options.validate();
  check_probe_size(spec, params);
  const double h = options.h > 0 ? options.h : default_fd_step(params.values);
  const double half_var = 0.5 * sigma * sigma;
  const Index p = params.size();

  CurvatureEstimate est;
  est.h = h;
  if (form == LaplacianForm::ratio) {
    est.method = "exact";
    est.value = half_var * per_example_laplacian_ratio(spec, params, data, h).sum();
    return est;
  }

  const double grad_part = per_example_grad_sq_norm(spec, params, data).sum();
  if (p <= options.exact_threshold) {
    est.method = "exact";
    est.value = half_var * (per_example_laplacian_log(spec, params, data, h).sum() + grad_part);
    return est;
  }

  // Hutchinson on Σ_i Δln L_i: one probe pair gives vᵀH_i v for every
  // example at once via per-example gradient batches.
  est.method = "hutchinson";
  est.probe_count = options.hutchinson_probes;
  rng::Xoshiro256pp gen(rng::derive_seed(options.seed, "hutchinson"));
  ParamVector shifted = params;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < options.hutchinson_probes; ++s) {
    const Eigen::VectorXd v = rademacher(p, gen);
    Eigen::VectorXd gp_dot = Eigen::VectorXd::Zero(data.n());
    Eigen::VectorXd gm_dot = Eigen::VectorXd::Zero(data.n());
    shifted.values = params.values + h * v;
    for_each_example_gradient(spec, shifted, data.features, data.labels,
                              [&](Index i, const Eigen::VectorXd& g) { gp_dot[i] = g.dot(v); });
    shifted.values = params.values - h * v;
    for_each_example_gradient(spec, shifted, data.features, data.labels,
                              [&](Index i, const Eigen::VectorXd& g) { gm_dot[i] = g.dot(v); });
    const double quad = (gp_dot - gm_dot).sum() / (2.0 * h);
    sum += quad;
    sum_sq += quad * quad;
  }
  const double n = double(options.hutchinson_probes);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  est.value = half_var * (mean + grad_part);
  est.standard_error = half_var * std::sqrt(var / n);
  return est;
}

McEstimate observed_pep_effect(const NetworkSpec& spec, const ParamVector& params,
                               const Dataset& data, double sigma, int member_count,
                               int group_count, std::uint64_t seed) {
  if (group_count < 2) throw config_error("observed_pep_effect needs at least 2 groups");
  if (member_count < group_count || member_count % group_count != 0) {
    throw config_error("member_count must be a positive multiple of group_count");
  }
  const double baseline = summed_ll(spec, params, data);
  PerturbConfig perturb;
  perturb.sigma = sigma;
  perturb.member_count = member_count / group_count;
  // The Laplacian/Fisher identities quantify over the whole parameter
  // vector, so the observed gap must perturb every coordinate too.
  perturb.mask = full_mask(spec);
  rng::SplitMix64 seeds(rng::derive_seed(seed, "observed"));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int g = 0; g < group_count; ++g) {
    perturb.seed = seeds.next();
    const EnsembleLogLik ll =
        ensemble_log_likelihood(spec, params, perturb, data.features, data.labels);
    const double gap = ll.ensemble * double(data.n()) - baseline;
    sum += gap;
    sum_sq += gap * gap;
  }
  const double n = double(group_count);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

CurvatureReport curvature_report(const NetworkSpec& spec, const ParamVector& params,
                                 const Dataset& data, double sigma,
                                 const CurvatureOptions& options, int observed_members,
                                 int observed_groups) {
  data.validate();
  const CurvatureEstimate lap = laplacian_loglik(spec, params, data, options);
  const double fisher = fisher_trace(spec, params, data);
  const CurvatureEstimate direct = pep_effect_direct(spec, params, data, sigma, options);
  const McEstimate observed =
      observed_pep_effect(spec, params, data, sigma, observed_members, observed_groups,
                          options.seed);

  CurvatureReport report;
  report.laplacian_loglik = lap.value;
  report.fisher_trace = fisher;
  report.pep_effect_predicted = pep_effect_predicted(lap.value, fisher, sigma);
  report.pep_effect_direct = direct.value;
  report.pep_effect_observed = observed.mean;
  report.sigma = sigma;
  report.example_count = data.n();
  report.h = lap.h;
  report.probe_count = lap.probe_count;
  report.seed = options.seed;
  report.laplacian_se = lap.standard_error;
  report.direct_se = direct.standard_error;
  report.observed_se = observed.standard_error;
  report.observed_members = observed_members;
  report.conditioning_warning = lap.conditioning_warning;
  return report;
}

}  // namespace pepkit
