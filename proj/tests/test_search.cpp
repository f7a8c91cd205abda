#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "pepkit/search.hpp"

using namespace pepkit;

TEST_CASE("golden ratio constant satisfies r^2 + r = 1") {
  CHECK(std::abs(kGoldenRatio * kGoldenRatio + kGoldenRatio - 1.0) < 1e-15);
  CHECK(std::abs(kGoldenRatio - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-15);
}

TEST_CASE("finds the maximum of a concave parabola") {
  auto f = [](double x) { return -(x - 0.7) * (x - 0.7); };
  const GoldenResult r = golden_section_max(f, 0.0, 2.0, 30);
  CHECK(std::abs(r.x_star - 0.7) < 1e-5);
  CHECK(r.bracket_low <= 0.7);
  CHECK(r.bracket_high >= 0.7);
}

TEST_CASE("bracket shrinks by exactly r per reduction") {
  auto f = [](double x) { return -x * x; };
  for (int iters : {1, 3, 7, 12}) {
    const GoldenResult r = golden_section_max(f, -1.0, 3.0, iters);
    const double width = r.bracket_high - r.bracket_low;
    const double expected = 4.0 * std::pow(kGoldenRatio, iters);
    CHECK(std::abs(width - expected) < 1e-12 * std::max(1.0, expected));
    CHECK(std::abs(r.x_star - 0.5 * (r.bracket_low + r.bracket_high)) < 1e-15);
  }
}

TEST_CASE("evaluation count is 2 + (iterations - 1)") {
  int calls = 0;
  auto f = [&calls](double x) {
    ++calls;
    return std::sin(x);
  };
  const GoldenResult r = golden_section_max(f, 0.0, 3.0, 7);
  CHECK(calls == 8);
  CHECK(r.evaluations.size() == 8);
  CHECK(std::abs(r.x_star - 1.5707963267948966) < 3.0 * std::pow(kGoldenRatio, 7));
}

TEST_CASE("evaluations are recorded in call order with matching values") {
  auto f = [](double x) { return std::cos(x - 1.0); };
  const GoldenResult r = golden_section_max(f, 0.0, 4.0, 5);
  for (const auto& e : r.evaluations) {
    CHECK(e.value == doctest::Approx(std::cos(e.x - 1.0)).epsilon(1e-15));
    CHECK(e.x >= 0.0);
    CHECK(e.x <= 4.0);
  }
  // first two probes are the canonical interior points of [0, 4]
  const double d = kGoldenRatio * 4.0;
  CHECK(std::abs(r.evaluations[0].x - (4.0 - d)) < 1e-12);
  CHECK(std::abs(r.evaluations[1].x - d) < 1e-12);
}

TEST_CASE("monotone objective drives the bracket to the favored edge") {
  auto rising = [](double x) { return x; };
  const GoldenResult hi = golden_section_max(rising, 0.0, 1.0, 20);
  CHECK(hi.bracket_high == doctest::Approx(1.0));
  CHECK(hi.x_star > 0.99);

  auto falling = [](double x) { return -x; };
  const GoldenResult lo = golden_section_max(falling, 0.0, 1.0, 20);
  CHECK(lo.bracket_low == doctest::Approx(0.0));
  CHECK(lo.x_star < 0.01);
}

TEST_CASE("one iteration uses both interior probes and keeps the better side") {
  auto f = [](double x) { return -(x - 0.2) * (x - 0.2); };
  const GoldenResult r = golden_section_max(f, 0.0, 1.0, 1);
  CHECK(r.evaluations.size() == 2);
  // c ≈ 0.382 scores better than d ≈ 0.618, so the bracket becomes [0, d]
  CHECK(std::abs(r.bracket_low - 0.0) < 1e-15);
  CHECK(std::abs(r.bracket_high - kGoldenRatio) < 1e-12);
}

TEST_CASE("plateau objective still contracts deterministically") {
  auto f = [](double) { return 1.0; };
  const GoldenResult r = golden_section_max(f, 2.0, 10.0, 6);
  const double expected = 8.0 * std::pow(kGoldenRatio, 6);
  CHECK(std::abs((r.bracket_high - r.bracket_low) - expected) < 1e-10);
}

TEST_CASE("input validation") {
  auto f = [](double x) { return x; };
  CHECK_THROWS_AS(golden_section_max(f, 1.0, 1.0, 5), config_error);
  CHECK_THROWS_AS(golden_section_max(f, 2.0, 1.0, 5), config_error);
  CHECK_THROWS_AS(golden_section_max(f, 0.0, 1.0, 0), config_error);
}

TEST_CASE("non-finite objective value raises a numeric error") {
  auto f = [](double x) {
    return x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x;
  };
  CHECK_THROWS_AS(golden_section_max(f, 0.0, 1.0, 4), numeric_error);
}
