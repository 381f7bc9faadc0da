#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qnd {

enum class Topology { kSingleArm, kDoubleArm };

// Membrane and its (2,1) mode. All frequencies in rad/s.
struct MembraneSpec {
  double length = 1e-6;
  double width = 0.3e-6;
  double d0 = 10e-9;
  double areal_density = 7.6e-7;  // kg/m^2, monolayer graphene
  std::optional<double> x0_override;
  double omega_m = 0;
  double quality_Q = 1e6;
  std::optional<double> gamma_b;  // omega_m / Q when absent
  std::optional<double> n_bar_m;  // wins over bath_temperature
  std::optional<double> bath_temperature;

  double mass() const { return areal_density * length * width; }
  double damping() const;
  double occupation() const;
};

struct CircuitSpec {
  Topology topology = Topology::kDoubleArm;
  double L0 = 0;
  double R0 = 0;
  double Z_out = 0;
  double C0 = 0;
  double parasitic_L = 0;
  double parasitic_R = 0;
  double stray_Cs = 0;
  double delta_L = 0;
  double delta_R = 0;
  double delta_C = 0;
  std::optional<double> n_bar_e;
  std::optional<double> reservoir_temperature;

  // n_e at omega, from temperature unless given explicitly.
  double occupation(double omega) const;
  bool balanced() const {
    return delta_L == 0 && delta_R == 0 && delta_C == 0;
  }
};

struct DerivedRates {
  double omega_s = 0;
  double omega_a = 0;  // double arm only
  double gamma_t = 0;
  double gamma_r = 0;
  double gamma_l = 0;  // double arm only
};

struct Couplings {
  double g1 = 0;
  double g2 = 0;
  double g_r = 0;
  double delta_g1 = 0;
};

// Throws kConfig on negative elements, asymmetries outside |dX| < X, or
// parasitic fields on a single-arm circuit.
void validate(const CircuitSpec& circuit);
void validate(const MembraneSpec& membrane);

// Non-fatal consistency remarks (gamma_b vs omega_m/Q, gamma_b << omega_m).
std::vector<std::string> warnings(const MembraneSpec& membrane);

DerivedRates derive_rates(const CircuitSpec& circuit);

// Element values reproducing the given rates. Double arm takes L/L0 and
// R/Z_out; single arm ignores them. Z_out fixes the impedance scale.
CircuitSpec circuit_from_rates(Topology topology, double omega_s,
                               double gamma_t, double gamma_r,
                               double L_over_L0, double R_over_Zout,
                               double Z_out);

double zero_point_motion(const MembraneSpec& membrane);

Couplings couplings_from_geometry(const MembraneSpec& membrane,
                                  double omega_s);

Couplings apply_stray_capacitance(Couplings c, double C0, double Cs);

double residual_coupling(double g1, double delta_g1, double delta_C,
                         double C0);

}  // namespace qnd
