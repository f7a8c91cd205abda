#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pepkit/metrics.hpp"
#include "pepkit/pep.hpp"
#include "pepkit/trainer.hpp"
#include "testutil.hpp"

using namespace pepkit;

namespace {

PerturbConfig weight_perturb(const NetworkSpec& spec, double sigma, int members,
                             std::uint64_t seed) {
  PerturbConfig config;
  config.sigma = sigma;
  config.member_count = members;
  config.mask = weight_mask(spec);
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("masks name the expected segments") {
  const NetworkSpec spec = NetworkSpec::mlp(4, {5}, 3);
  const auto weights = weight_mask(spec);
  REQUIRE(weights.size() == 2);
  CHECK(weights[0].kind == ParamKind::weight);
  CHECK(weights[1].layer == 1);
  const auto full = full_mask(spec);
  CHECK(full.size() == 4);

  const auto on = mask_coordinates(spec, weights);
  Index flagged = 0;
  for (bool b : on) flagged += b ? 1 : 0;
  CHECK(flagged == 4 * 5 + 5 * 3);  // weight entries only
  const auto all = mask_coordinates(spec, full);
  CHECK(std::count(all.begin(), all.end(), false) == 0);
}

TEST_CASE("sigma zero returns theta-star verbatim and baseline bit-exact") {
  const NetworkSpec spec = NetworkSpec::mlp(6, {7}, 4);
  const ParamVector theta = testutil::random_params(spec, 3);
  const FeatureMatrix x = testutil::random_features(25, 6, 4);
  const auto labels = testutil::random_labels(25, 4, 5);
  const PerturbConfig config = weight_perturb(spec, 0.0, 5, 11);

  const ParamVector member = sample_member(spec, theta, config, 2);
  CHECK(member.values == theta.values);

  const ProbMatrix ens = ensemble_predict(spec, theta, config, x);
  const ProbMatrix base = softmax(forward(spec, theta, x));
  CHECK((ens - base).cwiseAbs().maxCoeff() == 0.0);

  const EnsembleLogLik ll = ensemble_log_likelihood(spec, theta, config, x, labels);
  CHECK(ll.ensemble == mean_log_likelihood(spec, theta, x, labels));
  REQUIRE(ll.members.size() == 5);
  for (double m : ll.members) CHECK(m == ll.ensemble);
}

TEST_CASE("member noise matches the requested standard deviation") {
  // single layer 99 -> 100: 9900 weights under the mask
  const NetworkSpec spec = NetworkSpec::mlp(99, {}, 100);
  const ParamVector theta = zeros_like(spec);
  const double sigma = 0.37;
  const PerturbConfig config = weight_perturb(spec, sigma, 3, 1234);

  const auto on = mask_coordinates(spec, config.mask);
  for (auto dist : {PerturbDistribution::gaussian, PerturbDistribution::uniform}) {
    PerturbConfig c = config;
    c.distribution = dist;
    const ParamVector member = sample_member(spec, theta, c, 1);
    std::vector<double> draws;
    for (std::size_t k = 0; k < on.size(); ++k) {
      if (on[k]) draws.push_back(member.values[static_cast<Index>(k)]);
    }
    REQUIRE(draws.size() == 9900);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / double(draws.size());
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= double(draws.size() - 1);
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(double(draws.size())));
    CHECK(std::abs(std::sqrt(var) - sigma) < 0.03 * sigma);
    if (dist == PerturbDistribution::uniform) {
      const double bound = sigma * std::sqrt(3.0) + 1e-15;
      for (double d : draws) CHECK(std::abs(d) <= bound);
    }
  }
}

TEST_CASE("member draws are pure in (seed, member, coordinate)") {
  const NetworkSpec spec = NetworkSpec::mlp(3, {4}, 2);
  const ParamVector theta = testutil::random_params(spec, 8);
  const PerturbConfig config = weight_perturb(spec, 0.01, 4, 77);
  const ParamVector a = sample_member(spec, theta, config, 2);
  const ParamVector b = sample_member(spec, theta, config, 2);
  CHECK(a.values == b.values);
  const ParamVector other = sample_member(spec, theta, config, 3);
  CHECK(a.values != other.values);
  PerturbConfig reseeded = config;
  reseeded.seed = 78;
  CHECK(sample_member(spec, theta, reseeded, 2).values != a.values);
  // a larger member count does not shift earlier members' noise
  PerturbConfig wider = config;
  wider.member_count = 9;
  CHECK(sample_member(spec, theta, wider, 2).values == a.values);
}

TEST_CASE("perturbation respects the mask bit-for-bit") {
  const NetworkSpec spec = NetworkSpec::mlp(4, {5}, 3);
  const ParamVector theta = testutil::random_params(spec, 15);
  PerturbConfig config;
  config.sigma = 0.5;
  config.member_count = 1;
  config.mask = {{0, ParamKind::weight}};
  config.seed = 5;
  const ParamVector member = sample_member(spec, theta, config, 0);
  const auto layout = theta.layout;
  bool first_weights_moved = false;
  for (const auto& seg : layout) {
    for (Index i = 0; i < seg.length; ++i) {
      const Index k = seg.offset + i;
      if (seg.layer == 0 && seg.kind == ParamKind::weight) {
        if (member.values[k] != theta.values[k]) first_weights_moved = true;
      } else {
        CHECK(member.values[k] == theta.values[k]);
      }
    }
  }
  CHECK(first_weights_moved);
}

TEST_CASE("ensemble prediction is the arithmetic member mean") {
  const NetworkSpec spec = NetworkSpec::mlp(5, {6}, 3);
  const ParamVector theta = testutil::random_params(spec, 21);
  const FeatureMatrix x = testutil::random_features(12, 5, 22);
  const PerturbConfig config = weight_perturb(spec, 0.05, 4, 23);

  ProbMatrix manual;
  for (int j = 0; j < config.member_count; ++j) {
    const ProbMatrix pj = softmax(forward(spec, sample_member(spec, theta, config, j), x));
    if (j == 0) {
      manual = pj;
    } else {
      manual += pj;
    }
  }
  manual /= double(config.member_count);
  const ProbMatrix ens = ensemble_predict(spec, theta, config, x);
  CHECK((ens - manual).cwiseAbs().maxCoeff() == 0.0);
  // rows remain distributions
  for (Index i = 0; i < ens.rows(); ++i) {
    CHECK(ens.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ens.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("ensemble log-likelihood is ln of the mean label probability") {
  const NetworkSpec spec = NetworkSpec::mlp(4, {5}, 3);
  const ParamVector theta = testutil::random_params(spec, 31);
  const FeatureMatrix x = testutil::random_features(15, 4, 32);
  const auto labels = testutil::random_labels(15, 3, 33);
  const PerturbConfig config = weight_perturb(spec, 0.08, 6, 34);

  const EnsembleLogLik ll = ensemble_log_likelihood(spec, theta, config, x, labels);
  const ProbMatrix ens = ensemble_predict(spec, theta, config, x);
  double manual = 0.0;
  for (Index i = 0; i < ens.rows(); ++i) {
    manual += std::log(ens(i, labels[static_cast<std::size_t>(i)]));
  }
  manual /= double(ens.rows());
  CHECK(ll.ensemble == doctest::Approx(manual).epsilon(1e-12));

  // member traces equal each member's own mean log-likelihood
  REQUIRE(ll.members.size() == 6);
  for (int j = 0; j < 6; ++j) {
    const ParamVector theta_j = sample_member(spec, theta, config, j);
    CHECK(ll.members[static_cast<std::size_t>(j)] ==
          doctest::Approx(mean_log_likelihood(spec, theta_j, x, labels)).epsilon(1e-12));
  }
}

TEST_CASE("single-member ensemble equals that member's log-likelihood") {
  const NetworkSpec spec = NetworkSpec::mlp(3, {}, 2);
  const ParamVector theta = testutil::random_params(spec, 41);
  const FeatureMatrix x = testutil::random_features(10, 3, 42);
  const auto labels = testutil::random_labels(10, 2, 43);
  const PerturbConfig config = weight_perturb(spec, 0.2, 1, 44);
  const EnsembleLogLik ll = ensemble_log_likelihood(spec, theta, config, x, labels);
  CHECK(ll.ensemble == doctest::Approx(ll.members[0]).epsilon(1e-12));
}

TEST_CASE("ensemble log-likelihood never falls below the member mean") {
  // concavity of ln: mean_i ln(mean_j L_ij) >= mean_j mean_i ln L_ij
  const NetworkSpec spec = NetworkSpec::mlp(4, {6}, 3);
  const FeatureMatrix x = testutil::random_features(20, 4, 51);
  const auto labels = testutil::random_labels(20, 3, 52);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ParamVector theta = testutil::random_params(spec, seed * 2 + 1);
    const PerturbConfig config = weight_perturb(spec, 0.05 + 0.002 * double(seed), 4, seed);
    const EnsembleLogLik ll = ensemble_log_likelihood(spec, theta, config, x, labels);
    const double member_mean =
        std::accumulate(ll.members.begin(), ll.members.end(), 0.0) / double(ll.members.size());
    CHECK(ll.ensemble >= member_mean - 1e-12);
  }
}

TEST_CASE("vanishing ensemble probability floors and flags") {
  // one layer, one input; giant weights put the label's probability at 0
  const NetworkSpec spec = NetworkSpec::mlp(1, {}, 2);
  ParamVector theta = zeros_like(spec);
  theta.values[0] = 1000.0;   // weight for class 0
  theta.values[1] = -1000.0;  // weight for class 1
  FeatureMatrix x(1, 1);
  x << 1.0;
  const PerturbConfig config = weight_perturb(spec, 1e-6, 2, 9);
  const EnsembleLogLik ll = ensemble_log_likelihood(spec, theta, config, x, {1});
  CHECK(ll.floored);
  CHECK(ll.ensemble == doctest::Approx(std::log(kProbFloor)));
}

TEST_CASE("config validation rejects bad perturbation settings") {
  const NetworkSpec spec = NetworkSpec::mlp(3, {4}, 2);
  PerturbConfig config = weight_perturb(spec, 0.1, 3, 1);
  config.sigma = -0.1;
  CHECK_THROWS_AS(config.validate(spec), config_error);
  config = weight_perturb(spec, 0.1, 0, 1);
  CHECK_THROWS_AS(config.validate(spec), config_error);
  config = weight_perturb(spec, 0.1, 3, 1);
  config.mask.clear();
  CHECK_THROWS_AS(config.validate(spec), config_error);
  config = weight_perturb(spec, 0.1, 3, 1);
  config.mask.push_back({7, ParamKind::weight});
  CHECK_THROWS_AS(config.validate(spec), config_error);
  config = weight_perturb(spec, 0.1, 3, 1);
  config.mask.push_back(config.mask.front());
  CHECK_THROWS_AS(config.validate(spec), config_error);
  CHECK_THROWS_AS(sample_member(spec, testutil::random_params(spec, 1),
                                weight_perturb(spec, 0.1, 3, 1), 3),
                  config_error);
}

TEST_CASE("sigma search is deterministic and well-bookkept") {
  const NetworkSpec spec = NetworkSpec::mlp(4, {6}, 3);
  Dataset ds = synth_blobs(3, 60, 4, 0.5, 61);
  SplitSpec split;
  split.seed = 61;
  assign_splits(ds, split);
  TrainConfig tconfig;
  tconfig.epochs = 8;
  tconfig.seed = 61;
  const CheckpointSeries series = train(spec, ds, tconfig);
  const ParamVector theta = series.epochs.back().params;
  const Dataset val = ds.subset(Split::validation);

  SigmaSearchConfig search;
  search.sigma_low = 1e-4;
  search.sigma_high = 0.5;
  search.iterations = 7;
  search.member_count = 5;
  search.seed = 17;

  const SigmaSearchResult a = golden_section_sigma(spec, theta, search, val.features, val.labels);
  const SigmaSearchResult b = golden_section_sigma(spec, theta, search, val.features, val.labels);
  CHECK(a.sigma_star == b.sigma_star);
  CHECK(a.ll_at_sigma_star == b.ll_at_sigma_star);
  REQUIRE(a.curve.points.size() == b.curve.points.size());
  for (std::size_t i = 0; i < a.curve.points.size(); ++i) {
    CHECK(a.curve.points[i].sigma == b.curve.points[i].sigma);
    CHECK(a.curve.points[i].ensemble_ll == b.curve.points[i].ensemble_ll);
  }

  // guard row + two interior probes + one new probe per later reduction
  CHECK(a.curve.points.size() == 7 + 2);
  for (std::size_t i = 1; i < a.curve.points.size(); ++i) {
    CHECK(a.curve.points[i].sigma > a.curve.points[i - 1].sigma);
  }
  CHECK(a.curve.points.front().sigma == search.sigma_low);
  for (const auto& point : a.curve.points) {
    CHECK(point.member_ll.size() == 5);
  }
  CHECK(a.sigma_star >= search.sigma_low);
  CHECK(a.sigma_star <= search.sigma_high);
  CHECK(a.ll_baseline == mean_log_likelihood(spec, theta, val.features, val.labels));

  // the reported value really is the CRN objective at sigma_star
  PerturbConfig perturb;
  perturb.sigma = a.sigma_star;
  perturb.member_count = 5;
  perturb.mask = weight_mask(spec);
  perturb.seed = 17;
  const EnsembleLogLik at_star =
      ensemble_log_likelihood(spec, theta, perturb, val.features, val.labels);
  CHECK(a.ll_at_sigma_star == at_star.ensemble);
}

TEST_CASE("no-benefit flag trips when perturbation only hurts") {
  // contradictory labels at x = ±1 make the zero vector the exact
  // likelihood maximum, so any perturbation strictly degrades it
  const NetworkSpec spec = NetworkSpec::mlp(1, {}, 2);
  const ParamVector theta = zeros_like(spec);
  FeatureMatrix x(4, 1);
  x << 1.0, 1.0, -1.0, -1.0;
  const std::vector<int> labels = {0, 1, 0, 1};

  SigmaSearchConfig search;
  search.sigma_low = 0.5;
  search.sigma_high = 5.0;
  search.iterations = 4;
  search.member_count = 5;
  search.seed = 3;
  const SigmaSearchResult hurt = golden_section_sigma(spec, theta, search, x, labels);
  CHECK(hurt.ll_baseline == doctest::Approx(-std::log(2.0)));
  CHECK(hurt.no_pep_benefit);
  CHECK(hurt.ll_at_sigma_star < hurt.ll_baseline);

  // negligible noise cannot trip the flag
  search.sigma_low = 1e-9;
  search.sigma_high = 1e-8;
  const SigmaSearchResult negligible = golden_section_sigma(spec, theta, search, x, labels);
  CHECK_FALSE(negligible.no_pep_benefit);
}

TEST_CASE("sigma search config validation") {
  SigmaSearchConfig search;
  search.sigma_low = 0.0;
  CHECK_THROWS_AS(search.validate(), config_error);
  search = SigmaSearchConfig{};
  search.sigma_high = search.sigma_low;
  CHECK_THROWS_AS(search.validate(), config_error);
  search = SigmaSearchConfig{};
  search.iterations = 0;
  CHECK_THROWS_AS(search.validate(), config_error);
  search = SigmaSearchConfig{};
  search.member_count = 0;
  CHECK_THROWS_AS(search.validate(), config_error);
}
