#pragma once

#include <functional>
#include <vector>

#include "pepkit/errors.hpp"

namespace pepkit {

// (√5 − 1)/2, the interval shrink factor per reduction.
inline const double kGoldenRatio = 0.6180339887498948482;

struct GoldenEval {
  double x = 0.0;
  double value = 0.0;
};

struct GoldenResult {
  double x_star = 0.0;        // midpoint of the final bracket
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  std::vector<GoldenEval> evaluations;  // in evaluation order; 2 + (iterations-1) entries
};

// Maximizes f on [low, high] with exactly `iterations` interval
// reductions — no convergence tolerance. The two initial interior probes
// serve the first reduction; each later reduction evaluates one new
// point. Final bracket width is (high-low)·r^iterations.
GoldenResult golden_section_max(const std::function<double(double)>& f, double low, double high,
                                int iterations);

}  // namespace pepkit
