#pragma once

#include <stdexcept>
#include <string>

namespace pks {

// Configuration problems (bad parameters, malformed config files, out-of-range
// requests). Mapped to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures detected at runtime (divergent quadrature, non-finite
// samples, failed eigen solves). Mapped to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A requested profile is not positive (the expansion parameter is too large).
class DegenerateProfileError : public NumericError {
public:
    explicit DegenerateProfileError(const std::string& what) : NumericError(what) {}
};

// Time stepper blew past its stability guard.
class InstabilityError : public NumericError {
public:
    explicit InstabilityError(const std::string& what) : NumericError(what) {}
};

// Newton iteration for the (lambda, b) decomposition failed to converge.
class DecompositionError : public NumericError {
public:
    explicit DecompositionError(const std::string& what) : NumericError(what) {}
};

// Resampling during renormalization lost more accuracy than allowed.
class ResolutionError : public NumericError {
public:
    explicit ResolutionError(const std::string& what) : NumericError(what) {}
};

// Data handed to an operation violates its preconditions (negative density,
// wrong field role, inconsistent sizes).
class InvalidDataError : public NumericError {
public:
    explicit InvalidDataError(const std::string& what) : NumericError(what) {}
};

// Programming errors: misuse of the API that a caller should never trigger
// through configuration alone.
class UsageError : public std::logic_error {
public:
    explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

} // namespace pks
