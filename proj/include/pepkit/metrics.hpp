#pragma once

#include <string>
#include <vector>

#include "pepkit/nn.hpp"

namespace pepkit {

// Mean negative log-likelihood, −(1/N)·Σ ln p_{i,y_i}. Probabilities are
// floored at kProbFloor; `floored` reports whether that happened.
double nll(const ProbMatrix& probs, const std::vector<int>& labels, bool* floored = nullptr);

// (1/(N·K))·Σ_i Σ_k (onehot_ik − p_ik)². Non-negative, worst case 2/K.
double brier(const ProbMatrix& probs, const std::vector<int>& labels);

// Fraction of rows whose argmax equals the label (first index wins ties).
double accuracy(const ProbMatrix& probs, const std::vector<int>& labels);

// Per-row max probability.
std::vector<double> confidences(const ProbMatrix& probs);

struct ReliabilityBin {
  std::size_t count = 0;
  double accuracy = 0.0;         // fraction correct among members
  double mean_confidence = 0.0;  // mean max-probability among members
};

// Bin m (1-based) covers confidences in ((m-1)/M, m/M].
struct ReliabilityBins {
  int bin_count = 0;
  std::size_t total = 0;
  std::vector<ReliabilityBin> bins;
};

ReliabilityBins reliability(const ProbMatrix& probs, const std::vector<int>& labels,
                            int bin_count);

inline constexpr int kDefaultEceBins = 15;

// 100 · Σ_m (|D_m|/N)·|Acc_m − Conf_m|; empty bins contribute nothing.
double ece_percent(const ReliabilityBins& bins);

// Histogram both confidence samples over `bin_count` equal bins on [0,1]
// (same half-open convention), add smoothing mass 1e-6 per bin, normalize,
// return KL(p||q) + KL(q||p).
double symmetrized_kld(const std::vector<double>& in_conf, const std::vector<double>& out_conf,
                       int bin_count);

inline constexpr double kKldSmoothing = 1e-6;

}  // namespace pepkit
