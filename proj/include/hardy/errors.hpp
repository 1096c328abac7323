#ifndef HARDY_ERRORS_HPP
#define HARDY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hardy {

/// Tangent (or cotangent) evaluation too close to a pole of the calibration
/// multiplier; raised instead of returning a huge finite number.
class PoleError : public std::domain_error {
public:
    explicit PoleError(const std::string& what) : std::domain_error(what) {}
};

/// Zero pivot met during an LDL^T sweep; the shift must be nudged by the caller.
class ZeroPivotError : public std::runtime_error {
public:
    explicit ZeroPivotError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to converge. Carries the best bracket found.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double bracket_lo, double bracket_hi)
        : std::runtime_error(what), lo(bracket_lo), hi(bracket_hi) {}
    double lo;
    double hi;
};

/// Requested configuration cannot be satisfied (for example an epsilon
/// schedule that leaves the unit interval).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hardy

#endif
