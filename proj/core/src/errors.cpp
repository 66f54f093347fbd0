#include "hsrecon/errors.hpp"

#include <utility>

namespace hsrecon {

ConvergenceError::ConvergenceError(const std::string& what, double last_value,
                                   Eigen::VectorXd last_iterate, int iterations)
    : NumericError(what),
      last_value_(last_value),
      last_iterate_(std::move(last_iterate)),
      iterations_(iterations) {}

StageError::StageError(const std::string& what, std::int64_t stage)
    : NumericError("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}

DivergenceError::DivergenceError(const std::string& what, std::int64_t stage,
                                 std::vector<double> objectives)
    : StageError(what, stage), objectives_(std::move(objectives)) {}

TruncatedFileError::TruncatedFileError(std::uint64_t expected_bytes, std::uint64_t actual_bytes)
    : IoError("truncated cube file: expected " + std::to_string(expected_bytes) +
              " bytes, found " + std::to_string(actual_bytes)),
      expected_(expected_bytes),
      actual_(actual_bytes) {}

TrailingDataError::TrailingDataError(std::uint64_t expected_bytes, std::uint64_t actual_bytes)
    : IoError("cube file has trailing data: expected " + std::to_string(expected_bytes) +
              " bytes, found " + std::to_string(actual_bytes)),
      expected_(expected_bytes),
      actual_(actual_bytes) {}

}  // namespace hsrecon
