#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

enum class ErrorKind {
  kConfig,       // bad or missing input
  kSingular,     // zero inductance/capacitance and friends
  kDomain,       // argument outside the domain of a formula
  kNumeric,      // divergence, singular linear system
  kConvergence,  // iteration or fit failed to settle
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit code for an error kind: 2 config, 3 numeric, 4 convergence.
int exit_code(ErrorKind kind);

}  // namespace qnd
