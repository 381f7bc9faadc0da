#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "qndsim/constants.hpp"
#include "qndsim/params.hpp"

namespace qnd {

// Everything the closed forms need about the device.
struct Setup {
  CircuitSpec circuit;
  DerivedRates rates;
  Couplings couplings;
  MembraneSpec membrane;

  double n_e() const { return circuit.occupation(rates.omega_s); }
  double n_m() const { return membrane.occupation(); }
  double omega_m() const { return membrane.omega_m; }
  double gamma_b() const { return membrane.damping(); }
  double gamma() const { return rates.gamma_t + rates.gamma_r; }
  bool double_arm() const {
    return circuit.topology == Topology::kDoubleArm;
  }
};

// Builds rates from the circuit and fills in the residual coupling from
// delta_g1 and delta_C.
Setup make_setup(const CircuitSpec& circuit, const Couplings& couplings,
                 const MembraneSpec& membrane);

struct DriveSpec {
  std::optional<double> alpha_sq;  // photons in the window
  std::optional<double> flux;      // photons/s
  std::optional<double> T;         // window length
  double theta = kPi;
  std::optional<double> probe_frequency;

  bool has_photons() const { return alpha_sq || (flux && T); }
  double photons() const;
  double time() const;
  double photon_flux() const;
};

// Checks T > 0 and alpha_sq = flux*T (1e-9 relative) when all are given.
void validate(const DriveSpec& drive);

std::complex<double> reflection_coefficient(double omega, double n_b,
                                            const Setup& s);

struct HomodyneSignal {
  double V_M = 0;
  double sigma = 0;
};

HomodyneSignal homodyne_signal(double n_b, const DriveSpec& drive,
                               const Setup& s);

// d from D and sigma, for cross-checking against homodyne_signal.
double signal_distance(const DriveSpec& drive, const Setup& s);

double snr_squared(const DriveSpec& drive, const Setup& s);

double induced_heating_rlc(const DriveSpec& drive, const Setup& s);

// Same form with g_r in place of g1.
double residual_heating(const DriveSpec& drive, const Setup& s);

struct DoubleArmHeating {
  double Gamma_b = 0;
  double omega_b = 0;
};

DoubleArmHeating induced_heating_double(double omega, const DriveSpec& drive,
                                        const Setup& s);
DoubleArmHeating induced_heating_double_limit(const DriveSpec& drive,
                                              const Setup& s);

enum class Scenario { kRlcExact, kRlcApprox, kDoubleArm, kCombined };

std::vector<double> phonon_trajectory_analytic(const std::vector<double>& t,
                                               Scenario scenario,
                                               const DriveSpec& drive,
                                               const Setup& s,
                                               double n_b0 = 0.0);

struct DeltaNb {
  double bare = 0;      // antisymmetric mode (double arm) or g1 (RLC)
  double residual = 0;  // g_r
  double electrical = 0;
  double mechanical = 0;
  double total = 0;
};

DeltaNb delta_nb(const DriveSpec& drive, const Setup& s);

struct LambdaFamily {
  double lambda = 0;
  double lambda_b = kInf;
  double lambda_p = kInf;
};

LambdaFamily lambda_family(const Setup& s);

struct LambdaPrime {
  double lambda_prime = 0;
  double N_eff = 0;
  double N_e = 0;
};

LambdaPrime lambda_prime_and_occupation(double lambda, const DeltaNb& dn,
                                        double T, double gamma_b,
                                        double Gamma_b, double n_m);

double two_phonon_rate(const DriveSpec& drive, const Setup& s);

double hybridized_lambda(const Setup& s);

struct MeritReport {
  std::optional<double> d;
  std::optional<double> sigma;
  std::optional<double> D_sq;
  std::optional<double> Gamma_b;
  std::optional<double> Gamma_b_tilde;
  std::optional<double> omega_b_shift;
  std::optional<double> delta_nb_electrical;
  std::optional<double> delta_nb_mechanical;
  std::optional<double> two_phonon_rate;
  double lambda = 0;
  double lambda_b = kInf;
  double lambda_p = kInf;
  std::optional<double> lambda_hybridized;
  std::optional<double> lambda_prime;
  std::optional<double> N_eff;
  std::optional<double> N_e_effective;
};

// Drive-dependent fields stay empty when the drive has no photon number or
// no window length.
MeritReport merit_report(const DriveSpec& drive, const Setup& s);

}  // namespace qnd
