#include "qndsim/constants.hpp"

#include <cmath>

#include "qndsim/errors.hpp"

namespace qnd {

double bose_occupation(double omega, double temperature) {
  if (temperature < 0 || omega <= 0) {
    throw Error(ErrorKind::kDomain, "bose_occupation: need omega > 0, T >= 0");
  }
  if (temperature == 0) return 0.0;
  return 1.0 / std::expm1(kHbar * omega / (kBoltzmann * temperature));
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kSingular:
    case ErrorKind::kDomain:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
    case ErrorKind::kConvergence:
      return 4;
  }
  return 3;
}

}  // namespace qnd
