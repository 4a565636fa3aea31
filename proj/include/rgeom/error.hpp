#pragma once

#include <stdexcept>
#include <string>

namespace rgeom {

/// Bad arguments: dimension mismatches, out-of-range parameters, malformed
/// files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failures and metric evaluations that leave the PSD cone.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of a bound or estimator that depends on the data (e.g. a
/// speed profile that touches zero).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}
}  // namespace detail

}  // namespace rgeom
