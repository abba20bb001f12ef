#pragma once

#include <stdexcept>
#include <string>

namespace dephasim {

/// Base of every failure raised by the library. `exit_code()` is the
/// process status the CLI reports for it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or violated precondition. `field()` names the
/// offending parameter (JSON path for config documents).
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }
    int exit_code() const noexcept override { return 2; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    IoError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }
    int exit_code() const noexcept override { return 3; }

private:
    std::string path_;
};

/// Quadrature, eigensolver or probability failures.
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class QuadratureError : public NumericalError {
public:
    QuadratureError(double lo, double hi, double estimate, double error_estimate)
        : NumericalError("quadrature did not converge on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] (estimate " + std::to_string(estimate) +
                         ", error " + std::to_string(error_estimate) + ")"),
          lo_(lo), hi_(hi) {}
    double lower() const noexcept { return lo_; }
    double upper() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// A measurement sequence whose probability underflows the usable range.
class VanishingProbabilityError : public NumericalError {
public:
    explicit VanishingProbabilityError(double p)
        : NumericalError("measurement sequence probability " + std::to_string(p) +
                         " below 1e-14"),
          probability_(p) {}
    double probability() const noexcept { return probability_; }

private:
    double probability_;
};

/// Refusal to run a computation whose cost exceeds a hard cap.
class ComplexityError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace dephasim
