#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pepkit/data.hpp"
#include "pepkit/nn.hpp"
#include "pepkit/pep.hpp"

namespace pepkit {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

// Standard second-difference step: 1e-4 · max(1, ||x||_inf).
double default_fd_step(const Eigen::VectorXd& x);

// f(mu) + (σ²/2)·Δf(mu), Laplacian by central second differences with
// step h (default_fd_step(mu) when h <= 0). Residual against the exact
// Gaussian expectation is O(σ⁴): the third Taylor term has zero mean.
double taylor_expectation(const ScalarField& f, const Eigen::VectorXd& mu, double sigma,
                          double h = 0.0);

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Seeded IID Gaussian probe average of f around mu. σ=0 returns
// (f(mu), 0) without sampling.
McEstimate mc_expectation(const ScalarField& f, const Eigen::VectorXd& mu, double sigma,
                          int samples, std::uint64_t seed);

struct CurvatureOptions {
  double h = 0.0;                 // <= 0 means default_fd_step(params)
  int hutchinson_probes = 1000;
  std::uint64_t seed = 0;
  Index exact_threshold = 300;    // coordinate loop up to this many params

  void validate() const;
};

inline constexpr Index kMaxCurvatureParams = 100000;

struct CurvatureEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // 0 for the exact coordinate loop
  std::string method;           // "exact" or "hutchinson"
  int probe_count = 0;          // 0 for exact
  double h = 0.0;
  bool conditioning_warning = false;
};

// Δ𝓛(θ) for the summed log-likelihood 𝓛 = Σ_i ln L_i. Exact coordinate
// loop (central second differences) for P <= exact_threshold, otherwise
// Hutchinson with Rademacher probes and Hv by central differences of the
// gradient. Refuses P > kMaxCurvatureParams.
CurvatureEstimate laplacian_loglik(const NetworkSpec& spec, const ParamVector& params,
                                   const Dataset& data, const CurvatureOptions& options = {});

// Σ_i ||∇ ln L_i(θ)||² — trace of the outer-product empirical Fisher,
// assembled from per-example gradients without the P×P matrix.
double fisher_trace(const NetworkSpec& spec, const ParamVector& params, const Dataset& data);

// (σ²/2)·(Δ𝓛 + Tr F̃).
double pep_effect_predicted(double laplacian, double fisher_trace, double sigma);

// How ΔL_i/L_i is evaluated inside pep_effect_direct.
enum class LaplacianForm : std::uint8_t {
  // Second differences of L_i itself (normalized by L_i(θ) inside the
  // exponential to dodge underflow). Exact coordinate loop only.
  ratio = 0,
  // Δ ln L_i + ||∇ ln L_i||², the underflow-safe reformulation. Default.
  log_reformulated = 1,
};

// (σ²/2)·Σ_i ΔL_i/L_i — the direct form of the expected log-likelihood
// gain under perturbation, summed convention.
CurvatureEstimate pep_effect_direct(const NetworkSpec& spec, const ParamVector& params,
                                    const Dataset& data, double sigma,
                                    const CurvatureOptions& options = {},
                                    LaplacianForm form = LaplacianForm::log_reformulated);

// Per-example building blocks (exact coordinate loops, P <= exact_threshold).
Eigen::VectorXd per_example_laplacian_ratio(const NetworkSpec& spec, const ParamVector& params,
                                            const Dataset& data, double h = 0.0);
Eigen::VectorXd per_example_laplacian_log(const NetworkSpec& spec, const ParamVector& params,
                                          const Dataset& data, double h = 0.0);
Eigen::VectorXd per_example_grad_sq_norm(const NetworkSpec& spec, const ParamVector& params,
                                         const Dataset& data);

// Monte-Carlo estimate of the observed gap 𝕃(σ) − 𝓛(θ*), summed
// convention, from `group_count` independent ensembles of
// member_count/group_count members each. Perturbs every coordinate
// (Laplacian and Fisher quantify over the whole parameter vector).
McEstimate observed_pep_effect(const NetworkSpec& spec, const ParamVector& params,
                               const Dataset& data, double sigma, int member_count,
                               int group_count, std::uint64_t seed);

struct CurvatureReport {
  double laplacian_loglik = 0.0;
  double fisher_trace = 0.0;
  double pep_effect_predicted = 0.0;
  double pep_effect_direct = 0.0;
  double pep_effect_observed = 0.0;
  double sigma = 0.0;
  Index example_count = 0;
  // estimator metadata
  double h = 0.0;
  int probe_count = 0;
  std::uint64_t seed = 0;
  double laplacian_se = 0.0;
  double direct_se = 0.0;
  double observed_se = 0.0;
  int observed_members = 0;
  bool conditioning_warning = false;
};

// Runs the full set of probes at one σ.
CurvatureReport curvature_report(const NetworkSpec& spec, const ParamVector& params,
                                 const Dataset& data, double sigma,
                                 const CurvatureOptions& options = {}, int observed_members = 1000,
                                 int observed_groups = 10);

}  // namespace pepkit
