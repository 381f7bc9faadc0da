#include "qndsim/unbalanced.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "qndsim/errors.hpp"
#include "qndsim/linear_model.hpp"

namespace qnd {
namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using cd = std::complex<double>;

// State order: q_s, phi_s, q_a, phi_a, x, p (charges and fluxes scaled to
// sqrt(hbar C0 omega_s) and sqrt(hbar / (C0 omega_s))).
struct Model {
  Mat6 A = Mat6::Zero();
  Mat6 D = Mat6::Zero();
  Eigen::Vector4cd mean;  // phasor of (q_s, phi_s, q_a, phi_a)
  double omega_d = 0;
  double g1 = 0, dg1 = 0;
};

Model build(const Setup& s, double flux, bool track) {
  const auto& c = s.circuit;
  double ws = s.rates.omega_s;
  double L = c.parasitic_L, L0 = c.L0, R = c.parasitic_R, R0 = c.R0;
  double Z = c.Z_out, C0 = c.C0;
  double dL = c.delta_L, dR = c.delta_R, dC = c.delta_C;
  double det = L * L + 2 * L * L0 - dL * dL;
  double k = 1 / (C0 * ws);
  double cden = C0 * C0 - dC * dC;
  double c_ss = C0 / (2 * cden), c_sa = dC / cden, c_aa = 2 * C0 / cden;
  double C0w = C0 * ws;
  double Rs = R0 + Z + R / 2;
  double Ls = (L + 2 * L0) / 2;

  Model m;
  auto& A = m.A;
  // Currents from fluxes through the inverse mutual-inductance matrix.
  A(0, 1) = k * 2 * L / det;
  A(0, 3) = -k * dL / det;
  A(2, 3) = k * Ls / det;
  A(2, 1) = -k * dL / det;
  A(1, 0) = -C0w * c_ss;
  A(1, 2) = C0w * c_sa;
  A(1, 1) = -Rs * 2 * L / det + dR * dL / det;
  A(1, 3) = Rs * dL / det - dR * Ls / det;
  A(3, 2) = -C0w * c_aa;
  A(3, 0) = C0w * c_sa;
  A(3, 3) = -2 * R * Ls / det + dR * dL / det;
  A(3, 1) = 2 * R * dL / det - dR * 2 * L / det;
  double wm = s.omega_m(), gb = s.gamma_b();
  A(4, 5) = wm;
  A(5, 4) = -wm;
  A(4, 4) = A(5, 5) = -gb / 2;

  double ne = s.n_e(), nm = s.n_m();
  double e = C0 * ws * ws * (ne + 0.5);
  m.D(1, 1) = e * (2 * Z + 2 * R0 + R);
  m.D(3, 3) = 4 * e * R;
  m.D(1, 3) = m.D(3, 1) = 2 * e * dR;
  m.D(4, 4) = m.D(5, 5) = gb * (nm + 0.5);

  Eigen::Matrix4d Ael = A.topLeftCorner<4, 4>();
  m.omega_d = ws;
  if (track) {
    Eigen::EigenSolver<Eigen::Matrix4d> es(Ael, false);
    double best = kInf;
    for (int i = 0; i < 4; ++i) {
      double w = std::abs(es.eigenvalues()(i).imag());
      if (std::abs(w - ws) < std::abs(best - ws)) best = w;
    }
    m.omega_d = best;
  }
  Eigen::Vector4cd F = Eigen::Vector4cd::Zero();
  F(1) = 2 * std::sqrt(flux) * std::sqrt(2 * Z * C0) * ws;
  Eigen::Matrix4cd lhs = cd(0, -m.omega_d) * Eigen::Matrix4cd::Identity() -
                         Ael.cast<cd>();
  m.mean = lhs.partialPivLu().solve(F);
  m.g1 = s.couplings.g1;
  m.dg1 = s.couplings.delta_g1;
  return m;
}

Mat6 drift_at(const Model& m, double t) {
  Mat6 A = m.A;
  Eigen::Vector4cd y = m.mean * std::exp(cd(0, -m.omega_d * t));
  double qs = y(0).real(), qa = y(2).real();
  const double r2 = std::sqrt(2.0);
  double cs = -r2 * (m.g1 * qa + m.dg1 * qs / 2);
  double ca = -r2 * (m.g1 * qs + 2 * m.dg1 * qa);
  A(1, 4) += cs;
  A(3, 4) += ca;
  A(5, 0) += cs;
  A(5, 2) += ca;
  return A;
}

struct PeriodMap {
  Mat6 F = Mat6::Identity();
  Mat6 Q = Mat6::Zero();
  void apply(Mat6& S) const {
    S = (F * S * F.transpose() + Q).eval();
  }
  PeriodMap then(const PeriodMap& next) const {
    PeriodMap out;
    out.F = next.F * F;
    out.Q = next.F * Q * next.F.transpose() + next.Q;
    return out;
  }
};

PeriodMap period_map(const Model& m, int steps) {
  double P = kTwoPi / m.omega_d;
  double h = P / steps;
  const double c = std::sqrt(3.0) / 6;
  PeriodMap pm;
  Eigen::MatrixXd D = m.D;
  for (int j = 0; j < steps; ++j) {
    double t = j * h;
    Mat6 A1 = drift_at(m, t + (0.5 - c) * h);
    Mat6 A2 = drift_at(m, t + (0.5 + c) * h);
    Mat6 Abar = 0.5 * (A1 + A2) + std::sqrt(3.0) / 12 * h * (A2 * A1 - A1 * A2);
    StepMap sm = step_map(Abar, D, h);
    PeriodMap step;
    step.F = sm.F;
    step.Q = sm.Q;
    pm = pm.then(step);
  }
  pm.Q = 0.5 * (pm.Q + pm.Q.transpose()).eval();
  return pm;
}

}  // namespace

double analytic_heating_rate(const Setup& s, const DriveSpec& drive) {
  double ne2 = 1 + 2 * s.n_e();
  double Gb = induced_heating_double_limit(drive, s).Gamma_b;
  double Gt = residual_heating(drive, s);
  return (Gb * s.rates.omega_s / (2 * s.omega_m()) + Gt) * ne2 +
         s.gamma_b() * s.n_m();
}

UnbalancedResult unbalanced_simulate(const Setup& s, const DriveSpec& drive,
                                     const UnbalancedOptions& opts) {
  if (!s.double_arm()) {
    throw Error(ErrorKind::kConfig, "asym: needs a double arm circuit");
  }
  if (opts.steps_per_period < 4) {
    throw Error(ErrorKind::kConfig, "asym: steps_per_period must be >= 4");
  }
  const auto& c = s.circuit;
  UnbalancedResult res;
  auto& sol = res.solution;
  auto rel = [](double d, double x) { return x > 0 ? std::abs(d) / x : 0.0; };
  if (rel(c.delta_L, c.parasitic_L) > 0.25 ||
      rel(c.delta_R, c.parasitic_R) > 0.25 || rel(c.delta_C, c.C0) > 0.25 ||
      rel(s.couplings.delta_g1, s.couplings.g1) > 0.25) {
    sol.warnings.push_back("asymmetry outside the 25% validity envelope");
  }

  double flux = drive.photon_flux();
  Model m = build(s, flux, opts.track_resonance);
  res.drive_frequency = m.omega_d;

  Eigen::Matrix4d Ael = m.A.topLeftCorner<4, 4>();
  check_stability(Ael);
  Mat6 S = Mat6::Zero();
  S.topLeftCorner<4, 4>() = lyapunov_solve(Ael, m.D.topLeftCorner<4, 4>());
  S(4, 4) = S(5, 5) = opts.n_b0 + 0.5;

  double kappa = s.gamma();
  double rate = s.gamma_b();
  {
    DriveSpec unit;
    unit.alpha_sq = flux;
    unit.T = 1.0;
    rate += induced_heating_double_limit(unit, s).Gamma_b;
  }
  double t0 = opts.slope_t0.value_or(40 / kappa);
  double t1 = opts.slope_t1.value_or(std::max(0.05 / rate, 4 * t0));
  std::vector<double> times = opts.times;
  if (times.empty()) times = linspace(0, t1, 13);
  if (!(t1 > t0 && t0 >= 0)) {
    throw Error(ErrorKind::kConfig, "asym: need 0 <= slope_t0 < slope_t1");
  }
  res.slope_t0 = t0;
  res.slope_t1 = t1;

  PeriodMap one = period_map(m, opts.steps_per_period);
  double P = kTwoPi / m.omega_d;
  std::vector<PeriodMap> powers{one};
  auto power = [&](int j) -> const PeriodMap& {
    while (static_cast<int>(powers.size()) <= j) {
      powers.push_back(powers.back().then(powers.back()));
    }
    return powers[j];
  };
  int navg = std::max(
      1, static_cast<int>(std::lround(opts.average_periods * m.omega_d /
                                      s.omega_m())));

  const Mat6 S0 = S;
  auto sample = [&](const std::vector<double>& grid) {
    Mat6 St = S0;
    long long current = 0;
    std::vector<double> n(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      if (i > 0 && grid[i] < grid[i - 1]) {
        throw Error(ErrorKind::kDomain, "asym: output times must increase");
      }
      long long target = std::llround(grid[i] / P);
      long long d = target - current;
      for (int j = 0; d > 0; ++j, d >>= 1) {
        if (d & 1) power(j).apply(St);
      }
      current = target;
      Mat6 Sa = St;
      double acc = 0;
      for (int k = 0; k < navg; ++k) {
        acc += 0.5 * (Sa(4, 4) + Sa(5, 5)) - 0.5;
        one.apply(Sa);
      }
      n[i] = acc / navg;
    }
    return n;
  };
  sol.t = times;
  sol.n_b = sample(times);
  // The slope has its own samples so any output grid works.
  auto window = linspace(t0, t1, 7);
  sol.h = fitted_slope(window, sample(window), t0, t1);

  // Periodic steady state: the map raised to a power long enough for F -> 0.
  int j = 0;
  while (j < 62 && power(j).F.norm() > 1e-20) ++j;
  if (j == 62) {
    sol.n_b_steady = kInf;
    sol.T_half = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  Mat6 Sa = power(j).Q;
  double acc = 0;
  for (int k = 0; k < navg; ++k) {
    acc += 0.5 * (Sa(4, 4) + Sa(5, 5)) - 0.5;
    one.apply(Sa);
  }
  sol.n_b_steady = acc / navg;
  sol.T_half = crossing_time(sol.t, sol.n_b, sol.n_b_steady / 2);
  return res;
}

}  // namespace qnd
