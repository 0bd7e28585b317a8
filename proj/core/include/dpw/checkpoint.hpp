#pragma once

#include <string>

#include "dpw/model.hpp"
#include "dpw/normalization.hpp"

namespace dpw {

/// Model + dataset scaler bundle, self-contained for forecasting raw CSVs.
struct Checkpoint {
    DpwModel model;
    DatasetScaler scaler;
};

/// Versioned text container: config lines, scaler lines, then one
/// "param <name> <rank> <dims...> <values...>" entry per tensor with
/// round-trip-exact decimal values.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace dpw
