#pragma once

#include <stdexcept>
#include <string>

namespace vrs {

// Parameter outside the admissible range of a formula (e.g. alpha, lambda, s).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Evaluation at a particle location with zero softening, or other singular points.
class SingularEvaluation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration, grid, or input files.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A dyadic ladder or deposition grid does not cover the data.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive step fell below the minimum admissible size.
class StiffnessError : public std::runtime_error {
public:
    StiffnessError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

// Not enough snapshots, levels or samples for an estimate.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iteration failed to contract.
class NoConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vrs
