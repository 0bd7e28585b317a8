#pragma once

#include <stdexcept>
#include <string>

namespace dpw {

/// Shape/axis/index violations in tensor operations.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Precondition violations (non-scalar loss, mismatched stats, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid model/training/split configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ingestion failures: unreadable files, bad cells, ragged rows.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite loss during training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dpw
