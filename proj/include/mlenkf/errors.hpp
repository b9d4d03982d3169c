#pragma once

#include <stdexcept>
#include <string>

namespace mlenkf {

/// Raised when a caller breaks a documented precondition (bad level, shape
/// mismatch, out-of-range mode index).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised when an internal invariant that cannot fail for valid inputs does
/// fail, e.g. a Cholesky factorization of a matrix that must be SPD.
class InvariantBreach : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

inline void ensure(bool condition, const std::string& message) {
    if (!condition) throw InvariantBreach(message);
}

}  // namespace mlenkf
