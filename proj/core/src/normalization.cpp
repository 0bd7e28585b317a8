#include "dpw/normalization.hpp"

#include <cmath>

namespace dpw {

namespace {

void require_series(const Tensor& x, const char* op) {
    if (x.rank() < 1 || x.rank() > 2 || x.rows() < 1) {
        throw DimensionError(std::string(op) + ": expected a nonempty [len x C] series, got " +
                             x.shape_str());
    }
}

} // namespace

std::pair<Tensor, InstanceStats> revin_normalize(const Tensor& x, double eps) {
    require_series(x, "revin_normalize");
    if (eps <= 0.0) throw ContractError("revin_normalize: eps must be positive");
    const int len = x.rows();
    const int c = x.cols();
    InstanceStats stats;
    stats.mu.assign(c, 0.0);
    stats.sigma.assign(c, 0.0);
    const auto& xv = x.data();
    for (int j = 0; j < c; ++j) {
        double m = 0.0;
        for (int i = 0; i < len; ++i) m += xv[static_cast<std::size_t>(i) * c + j];
        m /= len;
        double var = 0.0;
        for (int i = 0; i < len; ++i) {
            const double d = xv[static_cast<std::size_t>(i) * c + j] - m;
            var += d * d;
        }
        var /= len;
        stats.mu[j] = m;
        stats.sigma[j] = std::max(std::sqrt(var), eps);
    }
    Tensor out = Tensor::zeros(x.shape());
    auto& o = out.data();
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < c; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * c + j;
            o[idx] = (xv[idx] - stats.mu[j]) / stats.sigma[j];
        }
    return {out, stats};
}

Tensor revin_denormalize(const Tensor& y_norm, const InstanceStats& stats) {
    require_series(y_norm, "revin_denormalize");
    const int c = y_norm.cols();
    if (static_cast<int>(stats.mu.size()) != c || static_cast<int>(stats.sigma.size()) != c) {
        throw ContractError("revin_denormalize: stats carry " + std::to_string(stats.mu.size()) +
                            " channels but the series has " + std::to_string(c));
    }
    const int len = y_norm.rows();
    Tensor out = Tensor::zeros(y_norm.shape());
    const auto& yv = y_norm.data();
    auto& o = out.data();
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < c; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * c + j;
            o[idx] = yv[idx] * stats.sigma[j] + stats.mu[j];
        }
    return out;
}

DatasetScaler fit_scaler(const Tensor& train_rows, double eps) {
    require_series(train_rows, "fit_scaler");
    const int len = train_rows.rows();
    const int c = train_rows.cols();
    DatasetScaler scaler;
    scaler.mean.assign(c, 0.0);
    scaler.stddev.assign(c, 0.0);
    const auto& xv = train_rows.data();
    for (int j = 0; j < c; ++j) {
        double m = 0.0;
        for (int i = 0; i < len; ++i) m += xv[static_cast<std::size_t>(i) * c + j];
        m /= len;
        double var = 0.0;
        for (int i = 0; i < len; ++i) {
            const double d = xv[static_cast<std::size_t>(i) * c + j] - m;
            var += d * d;
        }
        var /= len;
        scaler.mean[j] = m;
        scaler.stddev[j] = std::max(std::sqrt(var), eps);
    }
    return scaler;
}

Tensor apply_scaler(const Tensor& x, const DatasetScaler& scaler) {
    require_series(x, "apply_scaler");
    const int c = x.cols();
    if (static_cast<int>(scaler.mean.size()) != c) {
        throw ContractError("apply_scaler: scaler has " + std::to_string(scaler.mean.size()) +
                            " channels but the series has " + std::to_string(c));
    }
    Tensor out = Tensor::zeros(x.shape());
    const auto& xv = x.data();
    auto& o = out.data();
    const int len = x.rows();
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < c; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * c + j;
            o[idx] = (xv[idx] - scaler.mean[j]) / scaler.stddev[j];
        }
    return out;
}

Tensor invert_scaler(const Tensor& x, const DatasetScaler& scaler) {
    require_series(x, "invert_scaler");
    const int c = x.cols();
    if (static_cast<int>(scaler.mean.size()) != c) {
        throw ContractError("invert_scaler: scaler has " + std::to_string(scaler.mean.size()) +
                            " channels but the series has " + std::to_string(c));
    }
    Tensor out = Tensor::zeros(x.shape());
    const auto& xv = x.data();
    auto& o = out.data();
    const int len = x.rows();
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < c; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * c + j;
            o[idx] = xv[idx] * scaler.stddev[j] + scaler.mean[j];
        }
    return out;
}

} // namespace dpw
