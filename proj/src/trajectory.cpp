#include "qndsim/trajectory.hpp"

#include <math.h>  // pchip.hpp calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <limits>

#include "qndsim/errors.hpp"

namespace qnd {

double crossing_time(const std::vector<double>& t, const std::vector<double>& n,
                     double level) {
  if (t.size() != n.size() || t.size() < 2) {
    throw Error(ErrorKind::kDomain, "crossing_time: need >= 2 samples");
  }
  size_t k = 1;
  while (k < n.size() && (n[k] - level) * (n[0] - level) > 0) ++k;
  if (k == n.size()) return std::numeric_limits<double>::quiet_NaN();
  if (n[k] == level) return t[k];
  if (t.size() < 4) {
    double w = (level - n[k - 1]) / (n[k] - n[k - 1]);
    return t[k - 1] + w * (t[k] - t[k - 1]);
  }
  auto x = t;
  auto y = n;
  using boost::math::interpolators::pchip;
  pchip<std::vector<double>> spline(std::move(x), std::move(y));
  double a = t[k - 1], b = t[k];
  double fa = spline(a) - level;
  for (int it = 0; it < 200 && b - a > 1e-15 * std::abs(b); ++it) {
    double m = 0.5 * (a + b);
    double fm = spline(m) - level;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double fitted_slope(const std::vector<double>& t, const std::vector<double>& n,
                    double t0, double t1) {
  double st = 0, sn = 0, stt = 0, stn = 0;
  int count = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    st += t[i];
    sn += n[i];
    stt += t[i] * t[i];
    stn += t[i] * n[i];
    ++count;
  }
  if (count < 2) {
    throw Error(ErrorKind::kDomain, "fitted_slope: fewer than 2 samples");
  }
  double den = count * stt - st * st;
  return (count * stn - st * sn) / den;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out[i] = a + (b - a) * i / (count - 1);
  }
  return out;
}

}  // namespace qnd
