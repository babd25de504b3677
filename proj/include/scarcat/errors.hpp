#pragma once

#include <stdexcept>
#include <string>

namespace scarcat {

// Precondition or configuration violation. The CLI maps it to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative method did not reach its tolerance. Exit code 3.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string &what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// A numerical invariant (norm, hermiticity, symmetry leakage, ...) failed. Exit code 4.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// |up...up> is not an eigenstate of the Hamiltonian.
class ResidualTooLarge : public InvariantViolation {
public:
    ResidualTooLarge(const std::string &what, double residual)
        : InvariantViolation(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace scarcat
