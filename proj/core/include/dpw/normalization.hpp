#pragma once

#include <utility>
#include <vector>

#include "dpw/tensor.hpp"

namespace dpw {

/// Per-window instance statistics: one mean/std pair per channel, computed
/// over the look-back window only. sigma is floored by eps so constant
/// channels normalize to zero and denormalize back exactly.
struct InstanceStats {
    std::vector<double> mu;
    std::vector<double> sigma;
};

constexpr double kRevinEps = 1e-5;

/// x [L x C] -> ((x - mu) / sigma, stats). Population (1/L) standard deviation.
std::pair<Tensor, InstanceStats> revin_normalize(const Tensor& x, double eps = kRevinEps);

/// y_norm [T x C] -> y_norm * sigma + mu with the stats of the source window.
Tensor revin_denormalize(const Tensor& y_norm, const InstanceStats& stats);

/// Channelwise z-score parameters fit on the training split only.
struct DatasetScaler {
    std::vector<double> mean;
    std::vector<double> stddev;
};

DatasetScaler fit_scaler(const Tensor& train_rows, double eps = kRevinEps);
Tensor apply_scaler(const Tensor& x, const DatasetScaler& scaler);
Tensor invert_scaler(const Tensor& x, const DatasetScaler& scaler);

} // namespace dpw
