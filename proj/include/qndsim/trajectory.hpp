#pragma once

#include <string>
#include <vector>

namespace qnd {

struct DynamicsSolution {
  std::vector<double> t;
  std::vector<double> n_b;
  double T_half = 0;
  double n_b_steady = 0;  // +inf when there is no steady state
  double h = 0;           // heating rate, 1/s
  std::vector<std::string> warnings;
};

// Time at which n(t) first reaches `level`, from a monotone cubic (PCHIP)
// interpolant of the samples. NaN when the level is never reached.
double crossing_time(const std::vector<double>& t, const std::vector<double>& n,
                     double level);

// Least-squares slope of n(t) over samples with t in [t0, t1].
double fitted_slope(const std::vector<double>& t, const std::vector<double>& n,
                    double t0, double t1);

std::vector<double> linspace(double a, double b, int count);

}  // namespace qnd
