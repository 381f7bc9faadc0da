#pragma once

#include <limits>
#include <numbers>

namespace qnd {

struct PhysicalConstants {
  static constexpr double hbar = 1.054571817e-34;     // J s
  static constexpr double k_boltzmann = 1.380649e-23; // J/K
};

inline constexpr double kHbar = PhysicalConstants::hbar;
inline constexpr double kBoltzmann = PhysicalConstants::k_boltzmann;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bose-Einstein occupation at angular frequency omega and temperature T.
// Zero temperature gives zero.
double bose_occupation(double omega, double temperature);

}  // namespace qnd
