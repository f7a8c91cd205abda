#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "pepkit/curvature.hpp"
#include "pepkit/metrics.hpp"
#include "pepkit/pep.hpp"
#include "pepkit/trainer.hpp"

namespace pepkit {

// How a probability matrix was produced; lands in report JSON.
struct MethodProvenance {
  std::string name = "baseline";  // baseline | pep | ts
  std::optional<double> sigma;
  std::optional<int> member_count;
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature;
  std::optional<bool> temperature_fitted;
};

struct CalibrationReport {
  double nll = 0.0;
  double brier = 0.0;
  double ece_percent = 0.0;
  double accuracy = 0.0;
  ReliabilityBins bins;
  MethodProvenance method;
  bool prob_floor_hit = false;
};

CalibrationReport calibration_report(const ProbMatrix& probs, const std::vector<int>& labels,
                                     int ece_bins, MethodProvenance method);

// Shortest round-trip decimal form (std::to_chars); used for every
// number in CSV output so files are byte-stable and parse back exactly.
std::string format_double(double value);

nlohmann::json to_json(const ReliabilityBins& bins);
nlohmann::json to_json(const MethodProvenance& method);
nlohmann::json to_json(const CalibrationReport& report);
nlohmann::json to_json(const SigmaSearchResult& result, const SigmaSearchConfig& search);
nlohmann::json to_json(const CurvatureReport& report);

std::string sigma_curve_csv(const SigmaCurve& curve);
std::string reliability_csv(const ReliabilityBins& bins);
std::string train_metrics_csv(const CheckpointSeries& series);

struct OverfitProbeRow {
  int epoch = 0;
  double overfit_gap = 0.0;
  double sigma_star = 0.0;
  double pep_effect_observed = 0.0;
};

std::string overfit_probe_csv(const std::vector<OverfitProbeRow>& rows);

}  // namespace pepkit
