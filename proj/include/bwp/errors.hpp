#pragma once

#include <stdexcept>
#include <string>

namespace bwp {

/// Deterministic quadrature or fixed-point iteration failed to converge
/// within its refinement budget. Carries the best estimate seen so far so
/// callers can decide whether the partial result is usable.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double partial, double error_bound)
        : std::runtime_error(what), partial_(partial), error_bound_(error_bound) {}

    double partial() const { return partial_; }
    double error_bound() const { return error_bound_; }

private:
    double partial_;
    double error_bound_;
};

/// Two simulation configs handed to the coupled simulator are not ordered
/// in the sense required by the domination theorem.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input state for which the requested dynamics are not defined
/// (zero state, vanishing denominator).
class DegenerateInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace bwp
