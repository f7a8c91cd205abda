#include "pepkit/search.hpp"

#include <cmath>

namespace pepkit {

GoldenResult golden_section_max(const std::function<double(double)>& f, double low, double high,
                                int iterations) {
  if (!(low < high)) throw config_error("golden section needs low < high");
  if (iterations < 1) throw config_error("golden section needs at least 1 iteration");

  const double r = kGoldenRatio;
  double a = low;
  double b = high;
  double c = b - r * (b - a);
  double d = a + r * (b - a);

  GoldenResult result;
  auto eval = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw numeric_error("golden section objective is non-finite");
    result.evaluations.push_back({x, v});
    return v;
  };

  double fc = eval(c);
  double fd = eval(d);
  for (int k = 0; k < iterations; ++k) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      if (k + 1 < iterations) fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      if (k + 1 < iterations) fd = eval(d);
    }
  }

  result.x_star = 0.5 * (a + b);
  result.bracket_low = a;
  result.bracket_high = b;
  return result;
}

}  // namespace pepkit
