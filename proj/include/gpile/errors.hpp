#pragma once

#include <stdexcept>
#include <string>

namespace gpile {

// Covariance not invertible even after the regularization floor.
struct DegenerateCovariance : std::runtime_error {
    explicit DegenerateCovariance(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced where the pipeline requires finite math.
struct NumericFailure : std::runtime_error {
    explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// Malformed, truncated, or checksum-failing serialized data.
struct CorruptContainer : std::runtime_error {
    explicit CorruptContainer(const std::string& what) : std::runtime_error(what) {}
};

// File/load problems (missing sidecar, size mismatch, bad samples).
struct LoadError : std::runtime_error {
    explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gpile
