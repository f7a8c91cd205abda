#include "pepkit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace pepkit {

namespace {

void check_probs(const ProbMatrix& probs, const std::vector<int>& labels) {
  if (probs.rows() == 0 || probs.cols() < 2) throw shape_error("probability matrix too small");
  if (static_cast<Index>(labels.size()) != probs.rows()) {
    throw shape_error("label count != probability rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= probs.cols()) throw data_error("label outside probability columns");
  }
}

Index argmax_row(const ProbMatrix& probs, Index i) {
  Index best = 0;
  probs.row(i).maxCoeff(&best);
  return best;
}

// Half-open bins ((m-1)/M, m/M]: index = ceil(c*M) - 1, clamped.
int bin_of(double confidence, int bin_count) {
  const int idx = static_cast<int>(std::ceil(confidence * bin_count)) - 1;
  return std::clamp(idx, 0, bin_count - 1);
}

}  // namespace

double nll(const ProbMatrix& probs, const std::vector<int>& labels, bool* floored) {
  check_probs(probs, labels);
  return -log_likelihoods_from_probs(probs, labels, floored).mean();
}

double brier(const ProbMatrix& probs, const std::vector<int>& labels) {
  check_probs(probs, labels);
  double total = 0.0;
  for (Index i = 0; i < probs.rows(); ++i) {
    for (Index k = 0; k < probs.cols(); ++k) {
      const double target = (k == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
      const double diff = target - probs(i, k);
      total += diff * diff;
    }
  }
  return total / (double(probs.rows()) * double(probs.cols()));
}

double accuracy(const ProbMatrix& probs, const std::vector<int>& labels) {
  check_probs(probs, labels);
  Index correct = 0;
  for (Index i = 0; i < probs.rows(); ++i) {
    if (argmax_row(probs, i) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return double(correct) / double(probs.rows());
}

std::vector<double> confidences(const ProbMatrix& probs) {
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Index i = 0; i < probs.rows(); ++i) out[static_cast<std::size_t>(i)] = probs.row(i).maxCoeff();
  return out;
}

ReliabilityBins reliability(const ProbMatrix& probs, const std::vector<int>& labels,
                            int bin_count) {
  check_probs(probs, labels);
  if (bin_count < 1) throw config_error("reliability needs at least 1 bin");
  ReliabilityBins out;
  out.bin_count = bin_count;
  out.total = static_cast<std::size_t>(probs.rows());
  out.bins.assign(static_cast<std::size_t>(bin_count), ReliabilityBin{});
  for (Index i = 0; i < probs.rows(); ++i) {
    const double conf = probs.row(i).maxCoeff();
    auto& bin = out.bins[static_cast<std::size_t>(bin_of(conf, bin_count))];
    bin.count += 1;
    bin.mean_confidence += conf;
    if (argmax_row(probs, i) == labels[static_cast<std::size_t>(i)]) bin.accuracy += 1.0;
  }
  for (auto& bin : out.bins) {
    if (bin.count > 0) {
      bin.accuracy /= double(bin.count);
      bin.mean_confidence /= double(bin.count);
    }
  }
  return out;
}

double ece_percent(const ReliabilityBins& bins) {
  if (bins.total == 0) throw config_error("ece on empty bins");
  double weighted = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    weighted += (double(bin.count) / double(bins.total)) *
                std::abs(bin.accuracy - bin.mean_confidence);
  }
  return 100.0 * weighted;
}

double symmetrized_kld(const std::vector<double>& in_conf, const std::vector<double>& out_conf,
                       int bin_count) {
  if (in_conf.empty() || out_conf.empty()) throw config_error("symmetrized_kld on empty sample");
  if (bin_count < 1) throw config_error("symmetrized_kld needs at least 1 bin");
  for (const auto* sample : {&in_conf, &out_conf}) {
    for (double c : *sample) {
      if (!(c >= 0.0 && c <= 1.0)) throw data_error("confidence outside [0,1]");
    }
  }
  auto histogram = [bin_count](const std::vector<double>& confs) {
    std::vector<double> h(static_cast<std::size_t>(bin_count), kKldSmoothing);
    for (double c : confs) h[static_cast<std::size_t>(bin_of(c, bin_count))] += 1.0;
    const double total = double(confs.size()) + kKldSmoothing * bin_count;
    for (double& v : h) v /= total;
    return h;
  };
  const auto p = histogram(in_conf);
  const auto q = histogram(out_conf);
  double kld = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    kld += p[b] * std::log(p[b] / q[b]) + q[b] * std::log(q[b] / p[b]);
  }
  return kld;
}

}  // namespace pepkit
