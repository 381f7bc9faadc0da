#include "qndsim/params.hpp"

#include <cmath>

#include "qndsim/constants.hpp"
#include "qndsim/errors.hpp"

namespace qnd {

double MembraneSpec::damping() const {
  if (gamma_b) return *gamma_b;
  return omega_m / quality_Q;
}

double MembraneSpec::occupation() const {
  if (n_bar_m) return *n_bar_m;
  if (bath_temperature) return bose_occupation(omega_m, *bath_temperature);
  return 0.0;
}

double CircuitSpec::occupation(double omega) const {
  if (n_bar_e) return *n_bar_e;
  if (reservoir_temperature) {
    return bose_occupation(omega, *reservoir_temperature);
  }
  return 0.0;
}

void validate(const CircuitSpec& c) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kConfig, "circuit: " + msg);
  };
  for (double v : {c.L0, c.R0, c.Z_out, c.C0, c.parasitic_L, c.parasitic_R,
                   c.stray_Cs}) {
    if (!(v >= 0)) fail("element values must be >= 0");
  }
  if (c.n_bar_e && *c.n_bar_e < 0) fail("n_bar_e must be >= 0");
  if (c.topology == Topology::kSingleArm) {
    if (c.parasitic_L != 0 || c.parasitic_R != 0 || c.delta_L != 0 ||
        c.delta_R != 0 || c.delta_C != 0) {
      fail("single arm circuit takes no parasitic or asymmetry elements");
    }
    return;
  }
  if (c.delta_L != 0 && !(std::abs(c.delta_L) < c.parasitic_L)) {
    fail("|delta_L| must be below L");
  }
  if (c.delta_R != 0 && !(std::abs(c.delta_R) < c.parasitic_R)) {
    fail("|delta_R| must be below R");
  }
  if (c.delta_C != 0 && !(std::abs(c.delta_C) < c.C0)) {
    fail("|delta_C| must be below C0");
  }
}

void validate(const MembraneSpec& m) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kConfig, "membrane: " + msg);
  };
  if (!(m.length > 0 && m.width > 0 && m.d0 > 0)) {
    fail("lengths must be > 0");
  }
  if (!(m.omega_m > 0)) fail("omega_m must be > 0");
  if (!m.gamma_b && !(m.quality_Q > 0)) fail("need quality_Q > 0 or gamma_b");
  if (m.gamma_b && *m.gamma_b < 0) fail("gamma_b must be >= 0");
  if (m.n_bar_m && *m.n_bar_m < 0) fail("n_bar_m must be >= 0");
}

std::vector<std::string> warnings(const MembraneSpec& m) {
  std::vector<std::string> out;
  if (m.gamma_b && m.quality_Q > 0) {
    double from_q = m.omega_m / m.quality_Q;
    if (std::abs(*m.gamma_b - from_q) > 0.01 * from_q) {
      out.push_back("gamma_b disagrees with omega_m/Q by more than 1%");
    }
  }
  if (m.damping() > 1e-2 * m.omega_m) {
    out.push_back("gamma_b is not small compared with omega_m");
  }
  return out;
}

DerivedRates derive_rates(const CircuitSpec& c) {
  validate(c);
  DerivedRates r;
  if (c.C0 <= 0) throw Error(ErrorKind::kSingular, "derive_rates: C0 = 0");
  if (c.topology == Topology::kSingleArm) {
    if (c.L0 <= 0) throw Error(ErrorKind::kSingular, "derive_rates: L0 = 0");
    r.omega_s = 1.0 / std::sqrt(c.C0 * c.L0);
    r.gamma_t = c.Z_out / c.L0;
    r.gamma_r = c.R0 / c.L0;
    return r;
  }
  if (c.parasitic_L <= 0) {
    throw Error(ErrorKind::kSingular, "derive_rates: parasitic L = 0");
  }
  double ltot = c.parasitic_L + 2 * c.L0;
  r.omega_s = 1.0 / std::sqrt(c.C0 * ltot);
  r.omega_a = 1.0 / std::sqrt(c.C0 * c.parasitic_L);
  r.gamma_t = 2 * c.Z_out / ltot;
  r.gamma_r = (c.parasitic_R + 2 * c.R0) / ltot;
  r.gamma_l = c.parasitic_R / c.parasitic_L;
  return r;
}

CircuitSpec circuit_from_rates(Topology topology, double omega_s,
                               double gamma_t, double gamma_r,
                               double L_over_L0, double R_over_Zout,
                               double Z_out) {
  if (!(omega_s > 0 && gamma_t > 0 && Z_out > 0 && gamma_r >= 0)) {
    throw Error(ErrorKind::kConfig,
                "circuit rates: need omega_s, gamma_t, Z_out > 0");
  }
  CircuitSpec c;
  c.topology = topology;
  c.Z_out = Z_out;
  if (topology == Topology::kSingleArm) {
    c.L0 = Z_out / gamma_t;
    c.R0 = gamma_r * c.L0;
    c.C0 = 1.0 / (omega_s * omega_s * c.L0);
    return c;
  }
  if (!(L_over_L0 > 0)) {
    throw Error(ErrorKind::kConfig, "circuit rates: L_over_L0 must be > 0");
  }
  double ltot = 2 * Z_out / gamma_t;
  c.L0 = ltot / (L_over_L0 + 2);
  c.parasitic_L = L_over_L0 * c.L0;
  c.parasitic_R = R_over_Zout * Z_out;
  c.R0 = (gamma_r * ltot - c.parasitic_R) / 2;
  if (c.R0 < 0) {
    throw Error(ErrorKind::kConfig,
                "circuit rates: R/Z_out too large for the requested gamma_r");
  }
  c.C0 = 1.0 / (omega_s * omega_s * ltot);
  return c;
}

double zero_point_motion(const MembraneSpec& m) {
  if (m.x0_override) return *m.x0_override;
  double mass = m.mass();
  if (!(mass > 0)) {
    throw Error(ErrorKind::kConfig,
                "zero_point_motion: need x0_override or areal_density");
  }
  return std::sqrt(kHbar / (2 * mass * m.omega_m));
}

Couplings couplings_from_geometry(const MembraneSpec& m, double omega_s) {
  if (!(m.d0 > 0)) throw Error(ErrorKind::kConfig, "couplings: d0 must be > 0");
  double x0 = zero_point_motion(m);
  Couplings c;
  c.g1 = 8.0 / (kPi * kPi) * x0 * omega_s / m.d0;
  c.g2 = x0 * x0 * omega_s / (m.d0 * m.d0);
  return c;
}

Couplings apply_stray_capacitance(Couplings c, double C0, double Cs) {
  double f = C0 / (C0 + Cs);
  c.g1 *= f;
  c.g2 *= f;
  c.g_r *= f;
  c.delta_g1 *= f;
  return c;
}

double residual_coupling(double g1, double delta_g1, double delta_C,
                         double C0) {
  if (!(C0 > 0)) throw Error(ErrorKind::kSingular, "residual_coupling: C0 = 0");
  double r = delta_C / C0;
  return delta_g1 + 2 * g1 * r + delta_g1 * r * r;
}

}  // namespace qnd
