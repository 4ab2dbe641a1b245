#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quench {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model (or spec) violates one of its construction invariants.
class ModelValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was called with arguments outside its contract.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A requested accuracy cannot be certified (e.g. a non-mixing chain).
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// The statistical target or input is degenerate (zero variance, zero mass).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// The requested frequency lies in the excluded set for this model.
class NotApplicableError : public Error {
public:
    using Error::Error;
};

/// Memory or size budget exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A calibration search reached its cap before meeting its target.
class CalibrationInfeasibleError : public Error {
public:
    CalibrationInfeasibleError(const std::string& what, std::size_t level, std::size_t n_reached,
                               double achieved, double target)
        : Error(what), level_(level), n_reached_(n_reached), achieved_(achieved), target_(target) {}

    std::size_t level() const noexcept { return level_; }
    std::size_t n_reached() const noexcept { return n_reached_; }
    double achieved_probability() const noexcept { return achieved_; }
    double target_probability() const noexcept { return target_; }

private:
    std::size_t level_;
    std::size_t n_reached_;
    double achieved_;
    double target_;
};

}  // namespace quench
