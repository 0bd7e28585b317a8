#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpw/normalization.hpp"
#include "dpw/tensor.hpp"

namespace dpw {

/// A parsed multivariate series: every numeric column in file order.
/// Timestamps are informational only and may be empty.
struct RawSeries {
    std::vector<std::string> timestamps;
    std::vector<std::string> channel_names;
    Tensor values; // [len x C]

    int length() const { return values.defined() ? values.rows() : 0; }
    int channels() const { return values.defined() ? values.cols() : 0; }
};

/// ETT-style CSV: optional header, optional leading date column, the rest
/// numeric. Missing/non-numeric cells and ragged rows are ingestion errors.
RawSeries load_csv(const std::string& path);
void write_csv(const std::string& path, const RawSeries& series);

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

enum class Split { train, val, test };

/// Chronological splits with sliding (look-back, horizon) windows.
///
/// Rows are standardized by a scaler fit on the training rows only. Validation
/// and test look-back windows may reach back L rows into the preceding split;
/// targets never cross a split boundary forward.
class WindowDataset {
public:
    WindowDataset(const RawSeries& series, SplitRatios ratios, int lookback, int horizon,
                  int stride = 1, double scaler_eps = kRevinEps);
    /// Reuses a previously fit scaler (e.g. the one stored in a checkpoint).
    WindowDataset(const RawSeries& series, SplitRatios ratios, int lookback, int horizon,
                  const DatasetScaler& scaler, int stride = 1);

    int lookback() const { return lookback_; }
    int horizon() const { return horizon_; }
    int channels() const { return scaled_.cols(); }

    const DatasetScaler& scaler() const { return scaler_; }
    const Tensor& scaled_values() const { return scaled_; }

    /// First row of the validation / test target regions.
    int val_boundary() const { return n_train_; }
    int test_boundary() const { return n_train_ + n_val_; }
    int total_rows() const { return scaled_.rows(); }

    int window_count(Split split) const;
    /// Absolute start row of window i: input rows [start, start+L).
    int window_start(Split split, int i) const;
    /// (input [L x C], target [T x C]) in scaled units.
    std::pair<Tensor, Tensor> window(Split split, int i) const;

    /// Test hook: overwrite a scaled row (split construction already done).
    void poke_scaled_row(int row, const std::vector<double>& values);

private:
    int lookback_;
    int horizon_;
    int n_train_;
    int n_val_;
    DatasetScaler scaler_;
    Tensor scaled_;
    std::vector<int> starts_[3];

    const std::vector<int>& starts(Split split) const;
};

/// Per channel: linear trend + one sinusoid per entry of `periods` (channel-
/// dependent phase) + seeded Gaussian noise.
RawSeries synth_sine_trend(int length, int channels, const std::vector<double>& periods,
                           double trend_slope, double noise_sigma, std::uint64_t seed);

/// Rows of (window_id, horizon_step, channel, y_true, y_pred).
struct PredictionRow {
    int window_id = 0;
    int horizon_step = 0;
    int channel = 0;
    double y_true = 0.0;
    bool has_true = false;
    double y_pred = 0.0;
};

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows);

} // namespace dpw
