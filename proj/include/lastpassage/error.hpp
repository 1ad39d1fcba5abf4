#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lastpassage {

// Argument outside the mathematical domain of an operation (pole of psi,
// h(t) queried at or past the median, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Root finding or bracketing gave up.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computed quantity violated an invariant it must satisfy by construction.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class UnsupportedModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
public:
    SolverError(std::size_t step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace lastpassage
