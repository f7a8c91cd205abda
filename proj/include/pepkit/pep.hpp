#pragma once

#include <cstdint>
#include <vector>

#include "pepkit/data.hpp"
#include "pepkit/nn.hpp"

namespace pepkit {

enum class PerturbDistribution : std::uint8_t { gaussian = 0, uniform = 1 };

// One (layer, kind) segment of the parameter vector.
struct SegmentRef {
  Index layer = 0;
  ParamKind kind = ParamKind::weight;
  bool operator==(const SegmentRef&) const = default;
};

// All weight matrices, biases excluded (the default perturbation target).
std::vector<SegmentRef> weight_mask(const NetworkSpec& spec);
std::vector<SegmentRef> full_mask(const NetworkSpec& spec);

struct PerturbConfig {
  double sigma = 0.0;
  int member_count = 1;
  PerturbDistribution distribution = PerturbDistribution::gaussian;
  std::vector<SegmentRef> mask;  // must be non-empty
  std::uint64_t seed = 0;

  void validate(const NetworkSpec& spec) const;
};

// Per-coordinate flag vector for a mask.
std::vector<bool> mask_coordinates(const NetworkSpec& spec, const std::vector<SegmentRef>& mask);

// theta_star plus noise of standard deviation sigma on masked
// coordinates (uniform draws are variance-matched: half-width σ·√3).
// Pure function of (theta_star, seed, member_index, coordinate).
ParamVector sample_member(const NetworkSpec& spec, const ParamVector& theta_star,
                          const PerturbConfig& config, int member_index);

// Arithmetic mean over members of softmax(forward(θ_j)). σ=0 evaluates
// θ* once, so it reproduces the baseline bit-for-bit.
ProbMatrix ensemble_predict(const NetworkSpec& spec, const ParamVector& theta_star,
                            const PerturbConfig& config, const FeatureMatrix& features);

struct EnsembleLogLik {
  double ensemble = 0.0;               // mean_i ln[(1/m) Σ_j L_i(θ_j)]
  std::vector<double> members;         // per member: mean_i ln L_i(θ_j)
  bool floored = false;
};

EnsembleLogLik ensemble_log_likelihood(const NetworkSpec& spec, const ParamVector& theta_star,
                                       const PerturbConfig& config, const FeatureMatrix& features,
                                       const std::vector<int>& labels);

struct SigmaSearchConfig {
  double sigma_low = 5e-5;
  double sigma_high = 5e-3;
  int iterations = 7;
  int member_count = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SigmaCurvePoint {
  double sigma = 0.0;
  double ensemble_ll = 0.0;
  std::vector<double> member_ll;
};

// Every (σ, 𝕃) pair the search evaluated, σ strictly increasing.
struct SigmaCurve {
  std::vector<SigmaCurvePoint> points;
};

struct SigmaSearchResult {
  double sigma_star = 0.0;
  double ll_at_sigma_star = 0.0;  // mean per example, CRN stream
  double ll_baseline = 0.0;       // mean log-likelihood at θ*
  bool no_pep_benefit = false;
  SigmaCurve curve;
};

// Threshold for the no-benefit warning: both initial interior probes
// must undershoot the baseline by more than this.
inline constexpr double kNoBenefitTolerance = 1e-6;

// Golden-section maximization of σ ↦ 𝕃(σ) on the validation data with
// common random numbers: the same (seed, member, coordinate) noise at
// every σ, so the objective is a deterministic function of σ. The curve
// holds iterations+2 rows: a σ_low guard evaluation plus every interior
// probe. An empty mask means "all weights".
SigmaSearchResult golden_section_sigma(const NetworkSpec& spec, const ParamVector& theta_star,
                                       const SigmaSearchConfig& search,
                                       const FeatureMatrix& val_features,
                                       const std::vector<int>& val_labels,
                                       PerturbDistribution distribution = PerturbDistribution::gaussian,
                                       std::vector<SegmentRef> mask = {});

}  // namespace pepkit
