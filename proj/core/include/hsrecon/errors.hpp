#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hsrecon {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform (band counts, pixel counts, grids).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition or type invariant was violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Selection weights carry no mass, so no columns can be chosen.
class DegenerateSelectionError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Normal equations are singular (rank-deficient design with zero ridge).
class SingularSystemError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Power iteration did not settle; carries the last eigenvalue estimate and iterate.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double last_value, Eigen::VectorXd last_iterate,
                     int iterations);

    double last_value() const noexcept { return last_value_; }
    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_value_;
    Eigen::VectorXd last_iterate_;
    int iterations_;
};

/// A solver stage produced non-finite values, or the objective blew up.
class StageError : public NumericError {
public:
    StageError(const std::string& what, std::int64_t stage);
    std::int64_t stage() const noexcept { return stage_; }

private:
    std::int64_t stage_;
};

class DivergenceError : public StageError {
public:
    DivergenceError(const std::string& what, std::int64_t stage, std::vector<double> objectives);
    /// Objective history up to and including the offending stage (index 0 is the initial value).
    const std::vector<double>& objectives() const noexcept { return objectives_; }

private:
    std::vector<double> objectives_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public IoError {
public:
    using IoError::IoError;
};

class TruncatedFileError : public IoError {
public:
    TruncatedFileError(std::uint64_t expected_bytes, std::uint64_t actual_bytes);
    std::uint64_t expected_bytes() const noexcept { return expected_; }
    std::uint64_t actual_bytes() const noexcept { return actual_; }

private:
    std::uint64_t expected_;
    std::uint64_t actual_;
};

class TrailingDataError : public IoError {
public:
    TrailingDataError(std::uint64_t expected_bytes, std::uint64_t actual_bytes);
    std::uint64_t expected_bytes() const noexcept { return expected_; }
    std::uint64_t actual_bytes() const noexcept { return actual_; }

private:
    std::uint64_t expected_;
    std::uint64_t actual_;
};

/// Header dimensions are zero or their product does not fit in memory indexing.
class DimensionOverflowError : public IoError {
public:
    using IoError::IoError;
};

/// Malformed CSV content (header, column count, number syntax, wavelength order).
class ParseError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace hsrecon
