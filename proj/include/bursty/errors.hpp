#pragma once

#include <stdexcept>
#include <string>

namespace bursty {

// Invalid parameters or configuration (CLI exit code 2).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (CLI exit code 2).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical failure: non-convergence, non-finite state (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The stop condition of a simulation was not reached within the step cap.
class TruncationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// File system or parse failures on external files (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bursty
