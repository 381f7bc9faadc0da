#include "qndsim/metrics.hpp"

#include <cmath>

#include "qndsim/errors.hpp"

namespace qnd {
namespace {

using cd = std::complex<double>;

double sq(double x) { return x * x; }

// Occupation-weighted electrical noise factor 1 + 2 n_e.
double noise_factor(const Setup& s) { return 1 + 2 * s.n_e(); }

}  // namespace

Setup make_setup(const CircuitSpec& circuit, const Couplings& couplings,
                 const MembraneSpec& membrane) {
  validate(membrane);
  Setup s;
  s.circuit = circuit;
  s.rates = derive_rates(circuit);
  s.couplings = couplings;
  s.membrane = membrane;
  if (s.couplings.g_r == 0 &&
      (s.couplings.delta_g1 != 0 || circuit.delta_C != 0)) {
    s.couplings.g_r = residual_coupling(couplings.g1, couplings.delta_g1,
                                        circuit.delta_C, circuit.C0);
  }
  return s;
}

double DriveSpec::photons() const {
  if (alpha_sq) return *alpha_sq;
  if (flux && T) return *flux * *T;
  throw Error(ErrorKind::kConfig, "drive: photon number not specified");
}

double DriveSpec::time() const {
  if (T) return *T;
  if (alpha_sq && flux && *flux > 0) return *alpha_sq / *flux;
  throw Error(ErrorKind::kConfig, "drive: measurement time not specified");
}

double DriveSpec::photon_flux() const {
  if (flux) return *flux;
  return photons() / time();
}

void validate(const DriveSpec& d) {
  if (d.T && !(*d.T > 0)) {
    throw Error(ErrorKind::kConfig, "drive: T must be > 0");
  }
  if (d.alpha_sq && *d.alpha_sq < 0) {
    throw Error(ErrorKind::kConfig, "drive: alpha_sq must be >= 0");
  }
  if (d.flux && *d.flux < 0) {
    throw Error(ErrorKind::kConfig, "drive: flux must be >= 0");
  }
  if (d.alpha_sq && d.flux && d.T) {
    double want = *d.flux * *d.T;
    if (std::abs(*d.alpha_sq - want) > 1e-9 * std::max(want, 1.0)) {
      throw Error(ErrorKind::kConfig, "drive: alpha_sq != flux * T");
    }
  }
}

std::complex<double> reflection_coefficient(double omega, double n_b,
                                            const Setup& s) {
  const auto& r = s.rates;
  // The double arm couples both capacitor halves, doubling the response.
  double num = (s.double_arm() ? 4 : 2) * r.gamma_t * omega;
  double shift = sq(omega) - sq(r.omega_s) - s.couplings.g2 * r.omega_s * n_b;
  return num / cd(omega * s.gamma(), -shift);
}

HomodyneSignal homodyne_signal(double n_b, const DriveSpec& drive,
                               const Setup& s) {
  double ws = s.rates.omega_s;
  double scale = kHbar * ws * s.circuit.Z_out / 2;
  double omega = drive.probe_frequency.value_or(ws);
  double alpha = drive.has_photons() ? std::sqrt(drive.photons()) : 0.0;
  cd zeta = reflection_coefficient(omega, n_b, s);
  // Quadrature at phase theta; theta = pi picks -Im zeta.
  double quad = std::real(zeta * std::exp(cd(0, -drive.theta)) * cd(0, -1));
  HomodyneSignal out;
  out.V_M = alpha * std::sqrt(scale) * quad;
  out.sigma = std::sqrt(scale * noise_factor(s));
  return out;
}

double signal_distance(const DriveSpec& drive, const Setup& s) {
  return std::sqrt(snr_squared(drive, s)) *
         homodyne_signal(0, drive, s).sigma;
}

double snr_squared(const DriveSpec& drive, const Setup& s) {
  double pre = s.double_arm() ? 16 : 4;
  double g2 = s.couplings.g2;
  double gt = s.rates.gamma_t;
  return pre * sq(g2) * drive.photons() * sq(gt) /
         (noise_factor(s) * sq(sq(g2) + sq(s.gamma())));
}

double induced_heating_rlc(const DriveSpec& drive, const Setup& s) {
  double g = s.gamma();
  return 4 * sq(s.couplings.g1) * drive.photons() * s.rates.gamma_t /
         (drive.time() * g * (sq(g) + 4 * sq(s.omega_m())));
}

double residual_heating(const DriveSpec& drive, const Setup& s) {
  double g = s.gamma();
  return 4 * sq(s.couplings.g_r) * drive.photons() * s.rates.gamma_t /
         (drive.time() * g * (sq(g) + 4 * sq(s.omega_m())));
}

DoubleArmHeating induced_heating_double(double omega, const DriveSpec& drive,
                                        const Setup& s) {
  const auto& r = s.rates;
  double wa2 = sq(r.omega_a);
  cd pole_m = 1.0 / (-wa2 + (omega - r.omega_s) *
                                cd(omega - r.omega_s, r.gamma_l));
  cd pole_p = 1.0 / (-wa2 + (omega + r.omega_s) *
                                cd(omega + r.omega_s, r.gamma_l));
  double amp = drive.photons() * sq(s.couplings.g1 * r.omega_a / s.gamma());
  cd common = cd(0, 1) * r.gamma_t / (drive.time() * r.omega_s) * amp *
              (pole_m + pole_p);
  return {std::real(4.0 * common), std::imag(2.0 * common)};
}

DoubleArmHeating induced_heating_double_limit(const DriveSpec& drive,
                                              const Setup& s) {
  const auto& r = s.rates;
  double base = sq(s.couplings.g1) * drive.photons() * r.gamma_t /
                (drive.time() * sq(s.gamma()) * r.omega_s);
  return {8 * base * r.gamma_l * s.omega_m() / sq(r.omega_a), -4 * base};
}

std::vector<double> phonon_trajectory_analytic(const std::vector<double>& t,
                                               Scenario scenario,
                                               const DriveSpec& drive,
                                               const Setup& s, double n_b0) {
  for (double ti : t) {
    if (ti < 0) throw Error(ErrorKind::kDomain, "trajectory: negative time");
  }
  double gb = s.gamma_b();
  double nm = s.n_m();
  double ne2 = noise_factor(s);
  double wm = s.omega_m();
  std::vector<double> out(t.size());
  bool driven = drive.has_photons();

  if (scenario == Scenario::kRlcApprox || scenario == Scenario::kRlcExact) {
    double Gb = driven ? induced_heating_rlc(drive, s) : 0.0;
    if (scenario == Scenario::kRlcApprox || !driven) {
      for (size_t i = 0; i < t.size(); ++i) {
        double decay = std::exp(-gb * t[i]);
        double sat = gb > 0 ? (nm + Gb / gb * ne2) * (1 - decay)
                            : (Gb * ne2) * t[i];
        out[i] = n_b0 * decay + sat;
      }
      return out;
    }
    double g = s.gamma();
    double amp = 4 * sq(s.couplings.g1) * drive.photons() * s.rates.gamma_t *
                 ne2 / drive.time();
    double den = sq(-gb + g) + 4 * sq(wm);
    for (size_t i = 0; i < t.size(); ++i) {
      double ti = t[i];
      double v = n_b0 * std::exp(-gb * ti) + nm * (1 - std::exp(-gb * ti));
      v -= amp * std::exp(-g * ti) / (sq(g) * den);
      cd osc = std::exp(cd(0, -wm * ti)) / cd(gb + g, 2 * wm) +
               std::exp(cd(0, wm * ti)) / cd(gb + g, -2 * wm);
      v += 2 * amp * std::exp(-(gb + g) * ti / 2) / (g * den) * std::real(osc);
      v += amp * (gb + g) / (gb * sq(g) * den);
      v -= amp * std::exp(-gb * ti) / (gb * g * den);
      out[i] = v;
    }
    return out;
  }

  double Gb = 0;
  double source = gb * nm;
  if (driven) {
    Gb = induced_heating_double_limit(drive, s).Gamma_b;
    double ws = s.rates.omega_s;
    source += Gb * ws / wm * (s.n_e() + 0.5);
    if (scenario == Scenario::kCombined) {
      source += residual_heating(drive, s) * ne2;
    }
  }
  double rate = gb + Gb;
  for (size_t i = 0; i < t.size(); ++i) {
    double decay = std::exp(-rate * t[i]);
    double grow = rate > 0 ? -std::expm1(-rate * t[i]) / rate : t[i];
    out[i] = n_b0 * decay + source * grow;
  }
  return out;
}

DeltaNb delta_nb(const DriveSpec& drive, const Setup& s) {
  DeltaNb dn;
  double T = drive.time();
  dn.mechanical = s.gamma_b() * s.n_m() * T;
  if (drive.has_photons() && drive.photons() > 0) {
    if (s.double_arm()) {
      double Gb = induced_heating_double_limit(drive, s).Gamma_b;
      dn.bare = s.rates.omega_s / s.omega_m() * Gb * (s.n_e() + 0.5) * T;
      dn.residual = residual_heating(drive, s) * noise_factor(s) * T;
    } else {
      dn.bare = noise_factor(s) * sq(s.couplings.g1) * drive.photons() /
                (2 * sq(s.omega_m()));
    }
  }
  dn.electrical = dn.bare + dn.residual;
  dn.total = dn.electrical + dn.mechanical;
  return dn;
}

LambdaFamily lambda_family(const Setup& s) {
  const auto& c = s.couplings;
  const auto& r = s.rates;
  double ne2 = sq(noise_factor(s));
  LambdaFamily out;
  if (c.g2 == 0) {
    out.lambda = 0;
    out.lambda_b = c.g1 > 0 ? 0 : kInf;
    out.lambda_p = c.g_r > 0 ? 0 : kInf;
    return out;
  }
  if (!s.double_arm()) {
    out.lambda_b = c.g1 > 0 ? sq(c.g2 / c.g1) * sq(s.omega_m() / r.gamma_t) /
                                  (2 * ne2)
                            : kInf;
    out.lambda = out.lambda_b;
    return out;
  }
  double R = s.circuit.parasitic_R;
  if (c.g1 > 0 && R > 0) {
    out.lambda_b = 2 * sq(c.g2 / c.g1) * sq(r.omega_s / r.gamma_t) *
                   (s.circuit.Z_out / R) / ne2;
  }
  if (c.g_r > 0) {
    out.lambda_p = 2 * sq(c.g2 / c.g_r) * sq(s.omega_m() / r.gamma_t) / ne2;
  }
  double inv = 1 / out.lambda_b + 1 / out.lambda_p;
  out.lambda = inv > 0 ? 1 / inv : kInf;
  return out;
}

LambdaPrime lambda_prime_and_occupation(double lambda, const DeltaNb& dn,
                                        double T, double gamma_b,
                                        double Gamma_b, double n_m) {
  double el = dn.electrical;
  double mech = gamma_b * n_m * T;
  if (el < 0 || mech < 0 || (el == 0 && mech == 0)) {
    throw Error(ErrorKind::kDomain,
                "lambda_prime: heating parts must be >= 0 and not all zero");
  }
  LambdaPrime out;
  out.lambda_prime = lambda * el / (el + mech);
  double rate = T * (gamma_b + Gamma_b);
  out.N_e = rate > 0 ? el / rate : kInf;
  if (n_m > 0) {
    double gap = lambda - out.lambda_prime;
    out.N_eff = gap > 0 ? n_m * lambda / gap : kInf;
  } else {
    out.N_eff = out.N_e;
  }
  return out;
}

double two_phonon_rate(const DriveSpec& drive, const Setup& s) {
  return sq(s.couplings.g2) * drive.photons() * s.rates.gamma_t /
         (sq(s.gamma() / 2) + sq(2 * s.omega_m()));
}

double hybridized_lambda(const Setup& s) {
  if (!s.double_arm()) {
    throw Error(ErrorKind::kConfig, "hybridized_lambda: double arm only");
  }
  double ne = s.n_e();
  const auto& r = s.rates;
  if (s.couplings.g1 == 0) return 0;
  if (r.gamma_l == 0) return kInf;
  return 2 * sq(s.couplings.g1) * r.gamma_t /
         ((1 + ne) * (1 + 2 * ne) * sq(s.gamma()) * r.gamma_l);
}

MeritReport merit_report(const DriveSpec& drive, const Setup& s) {
  MeritReport m;
  auto lf = lambda_family(s);
  m.lambda = lf.lambda;
  m.lambda_b = lf.lambda_b;
  m.lambda_p = lf.lambda_p;
  if (s.double_arm()) m.lambda_hybridized = hybridized_lambda(s);
  if (!drive.has_photons()) return m;
  auto hs0 = homodyne_signal(0, drive, s);
  auto hs1 = homodyne_signal(1, drive, s);
  m.d = hs1.V_M - hs0.V_M;
  m.sigma = hs0.sigma;
  m.D_sq = snr_squared(drive, s);
  if (!(drive.T || drive.flux)) return m;
  double Gb;
  if (s.double_arm()) {
    auto h = induced_heating_double_limit(drive, s);
    Gb = h.Gamma_b;
    m.omega_b_shift = h.omega_b;
    m.Gamma_b_tilde = residual_heating(drive, s);
  } else {
    Gb = induced_heating_rlc(drive, s);
  }
  m.Gamma_b = Gb;
  m.two_phonon_rate = two_phonon_rate(drive, s);
  auto dn = delta_nb(drive, s);
  m.delta_nb_electrical = dn.electrical;
  m.delta_nb_mechanical = dn.mechanical;
  if (dn.total > 0) {
    auto lp = lambda_prime_and_occupation(lf.lambda, dn, drive.time(),
                                          s.gamma_b(), Gb, s.n_m());
    m.lambda_prime = lp.lambda_prime;
    m.N_eff = lp.N_eff;
    m.N_e_effective = lp.N_e;
  }
  return m;
}

}  // namespace qnd
