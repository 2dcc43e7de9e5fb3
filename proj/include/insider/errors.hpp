#pragma once

#include <stdexcept>
#include <string>

namespace insider {

// Argument outside the domain of an operation (t beyond the signal horizon,
// degenerate remaining variance, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Scenario or object configuration violates an invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller violated an operation precondition (e.g. perturbation leaves the control box).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Forward simulation produced a non-finite or inadmissible state.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Backward solver failure (rank-deficient regression, non-positive k, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Equilibrium construction failure (non-positive denominator, no convergence).
class EquilibriumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A coefficient or Hamiltonian evaluation returned a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace insider
