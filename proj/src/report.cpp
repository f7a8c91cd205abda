#include "pepkit/report.hpp"

#include <charconv>

namespace pepkit {

CalibrationReport calibration_report(const ProbMatrix& probs, const std::vector<int>& labels,
                                     int ece_bins, MethodProvenance method) {
  CalibrationReport report;
  report.nll = nll(probs, labels, &report.prob_floor_hit);
  report.brier = brier(probs, labels);
  report.accuracy = accuracy(probs, labels);
  report.bins = reliability(probs, labels, ece_bins);
  report.ece_percent = ece_percent(report.bins);
  report.method = std::move(method);
  return report;
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const ReliabilityBins& bins) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t b = 0; b < bins.bins.size(); ++b) {
    rows.push_back({{"bin", b + 1},
                    {"count", bins.bins[b].count},
                    {"accuracy", bins.bins[b].accuracy},
                    {"mean_confidence", bins.bins[b].mean_confidence}});
  }
  return {{"bin_count", bins.bin_count}, {"total", bins.total}, {"bins", rows}};
}

nlohmann::json to_json(const MethodProvenance& method) {
  nlohmann::json j{{"name", method.name}};
  if (method.sigma) j["sigma"] = *method.sigma;
  if (method.member_count) j["members"] = *method.member_count;
  if (method.seed) j["seed"] = *method.seed;
  if (method.temperature) j["temperature"] = *method.temperature;
  if (method.temperature_fitted) j["temperature_fitted"] = *method.temperature_fitted;
  return j;
}

nlohmann::json to_json(const CalibrationReport& report) {
  return {{"kind", "calibration_report"},
          {"method", to_json(report.method)},
          {"metrics",
           {{"nll", report.nll},
            {"brier", report.brier},
            {"ece_percent", report.ece_percent},
            {"accuracy", report.accuracy},
            {"top1_error_percent", 100.0 * (1.0 - report.accuracy)}}},
          {"reliability", to_json(report.bins)},
          {"prob_floor_hit", report.prob_floor_hit}};
}

nlohmann::json to_json(const SigmaSearchResult& result, const SigmaSearchConfig& search) {
  return {{"kind", "pep_search"},
          {"sigma_star", result.sigma_star},
          {"ll_at_sigma_star", result.ll_at_sigma_star},
          {"ll_baseline", result.ll_baseline},
          {"no_pep_benefit", result.no_pep_benefit},
          {"search",
           {{"sigma_low", search.sigma_low},
            {"sigma_high", search.sigma_high},
            {"iterations", search.iterations},
            {"members", search.member_count},
            {"seed", search.seed}}}};
}

nlohmann::json to_json(const CurvatureReport& report) {
  return {{"kind", "curvature_report"},
          {"sigma", report.sigma},
          {"laplacian_loglik", report.laplacian_loglik},
          {"fisher_trace", report.fisher_trace},
          {"pep_effect_predicted", report.pep_effect_predicted},
          {"pep_effect_direct", report.pep_effect_direct},
          {"pep_effect_observed", report.pep_effect_observed},
          {"example_count", report.example_count},
          {"estimator",
           {{"h", report.h},
            {"probe_count", report.probe_count},
            {"seed", report.seed},
            {"laplacian_se", report.laplacian_se},
            {"direct_se", report.direct_se},
            {"observed_se", report.observed_se},
            {"observed_members", report.observed_members},
            {"conditioning_warning", report.conditioning_warning}}}};
}

std::string sigma_curve_csv(const SigmaCurve& curve) {
  if (curve.points.empty()) throw config_error("empty sigma curve");
  const std::size_t m = curve.points.front().member_ll.size();
  std::string out = "sigma,ensemble_ll";
  for (std::size_t j = 1; j <= m; ++j) out += ",member_ll_" + std::to_string(j);
  out += "\n";
  for (const auto& point : curve.points) {
    out += format_double(point.sigma) + "," + format_double(point.ensemble_ll);
    for (double v : point.member_ll) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string reliability_csv(const ReliabilityBins& bins) {
  std::string out = "bin,low,high,count,accuracy,mean_confidence\n";
  for (std::size_t b = 0; b < bins.bins.size(); ++b) {
    const double low = double(b) / bins.bin_count;
    const double high = double(b + 1) / bins.bin_count;
    out += std::to_string(b + 1) + "," + format_double(low) + "," + format_double(high) + "," +
           std::to_string(bins.bins[b].count) + "," + format_double(bins.bins[b].accuracy) + "," +
           format_double(bins.bins[b].mean_confidence) + "\n";
  }
  return out;
}

std::string train_metrics_csv(const CheckpointSeries& series) {
  std::string out = "epoch,train_nll,val_nll\n";
  for (const auto& ckpt : series.epochs) {
    out += std::to_string(ckpt.epoch) + "," + format_double(ckpt.train_nll) + "," +
           format_double(ckpt.val_nll) + "\n";
  }
  return out;
}

std::string overfit_probe_csv(const std::vector<OverfitProbeRow>& rows) {
  std::string out = "epoch,overfit_gap,sigma_star,pep_effect_observed\n";
  for (const auto& row : rows) {
    out += std::to_string(row.epoch) + "," + format_double(row.overfit_gap) + "," +
           format_double(row.sigma_star) + "," + format_double(row.pep_effect_observed) + "\n";
  }
  return out;
}

}  // namespace pepkit
