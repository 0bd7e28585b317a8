#include "dpw/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace dpw {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Tensor copy_rows(const Tensor& x, int begin, int end) {
    const int c = x.cols();
    Tensor out = Tensor::zeros({end - begin, c});
    const auto& xv = x.data();
    auto& o = out.data();
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < c; ++j)
            o[static_cast<std::size_t>(i - begin) * c + j] =
                xv[static_cast<std::size_t>(i) * c + j];
    return out;
}

DatasetScaler fit_train_scaler(const RawSeries& series, SplitRatios ratios, double eps) {
    const int n_train = static_cast<int>(series.length() * ratios.train);
    if (n_train < 1) throw ConfigError("training split is empty");
    return fit_scaler(copy_rows(series.values, 0, n_train), eps);
}

} // namespace

RawSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw DataError("'" + path + "' is empty");

    // Header detection: a first row whose cells are not all numeric.
    auto first = split_line(lines[0]);
    double tmp;
    bool header = false;
    for (const auto& cell : first) {
        if (!parse_double(cell, tmp)) {
            header = true;
            break;
        }
    }
    std::size_t data_begin = header ? 1 : 0;
    if (data_begin >= lines.size()) throw DataError("'" + path + "' has no data rows");

    // Date column detection from the first data row.
    auto probe = split_line(lines[data_begin]);
    if (probe.empty()) throw DataError("'" + path + "' has no data rows");
    const bool has_date = !parse_double(probe[0], tmp);
    const std::size_t first_numeric = has_date ? 1 : 0;
    if (probe.size() <= first_numeric) {
        throw DataError("'" + path + "' row 1 has no numeric columns");
    }
    const std::size_t n_cols = probe.size();
    const int channels = static_cast<int>(n_cols - first_numeric);

    RawSeries series;
    if (header) {
        for (std::size_t j = first_numeric; j < first.size() && j < n_cols; ++j) {
            series.channel_names.push_back(first[j]);
        }
    }
    while (static_cast<int>(series.channel_names.size()) < channels) {
        series.channel_names.push_back("c" + std::to_string(series.channel_names.size()));
    }

    const std::size_t n_rows = lines.size() - data_begin;
    std::vector<double> values;
    values.reserve(n_rows * channels);
    for (std::size_t r = 0; r < n_rows; ++r) {
        auto cells = split_line(lines[data_begin + r]);
        if (cells.size() != n_cols) {
            throw DataError("'" + path + "' row " + std::to_string(r + 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(n_cols));
        }
        if (has_date) series.timestamps.push_back(cells[0]);
        for (std::size_t j = first_numeric; j < n_cols; ++j) {
            double v;
            if (!parse_double(cells[j], v)) {
                throw DataError("'" + path + "' row " + std::to_string(r + 1) + " column " +
                                std::to_string(j + 1) + ": cannot parse '" + cells[j] + "'");
            }
            values.push_back(v);
        }
    }
    series.values = Tensor::from_values({static_cast<int>(n_rows), channels}, std::move(values));
    return series;
}

void write_csv(const std::string& path, const RawSeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    const int len = series.length();
    const int c = series.channels();
    const bool dates = !series.timestamps.empty();
    if (dates) out << "date,";
    for (int j = 0; j < c; ++j) {
        if (j) out << ',';
        out << (j < static_cast<int>(series.channel_names.size())
                    ? series.channel_names[j]
                    : "c" + std::to_string(j));
    }
    out << '\n';
    const auto& v = series.values.data();
    for (int i = 0; i < len; ++i) {
        if (dates) out << series.timestamps[i] << ',';
        for (int j = 0; j < c; ++j) {
            if (j) out << ',';
            out << format_double(v[static_cast<std::size_t>(i) * c + j]);
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

WindowDataset::WindowDataset(const RawSeries& series, SplitRatios ratios, int lookback,
                             int horizon, int stride, double scaler_eps)
    : WindowDataset(series, ratios, lookback, horizon,
                    fit_train_scaler(series, ratios, scaler_eps), stride) {}

WindowDataset::WindowDataset(const RawSeries& series, SplitRatios ratios, int lookback,
                             int horizon, const DatasetScaler& scaler, int stride)
    : lookback_(lookback), horizon_(horizon) {
    if (lookback < 1 || horizon < 1) throw ConfigError("lookback and horizon must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    const double ratio_sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios sum to " + std::to_string(ratio_sum) + ", expected 1");
    }
    const int total = series.length();
    n_train_ = static_cast<int>(total * ratios.train);
    n_val_ = static_cast<int>(total * ratios.val);
    const int n_test = total - n_train_ - n_val_;
    if (n_train_ < 1) throw ConfigError("training split is empty");

    scaler_ = scaler;
    scaled_ = apply_scaler(series.values, scaler_);

    // Target regions per split: [0,n_train), [n_train,n_train+n_val),
    // [n_train+n_val,total). Val/test inputs reach back L rows.
    struct Region {
        int first_start, last_start;
    };
    const Region regions[3] = {
        {0, n_train_ - lookback - horizon},
        {n_train_ - lookback, n_train_ + n_val_ - lookback - horizon},
        {n_train_ + n_val_ - lookback, total - lookback - horizon},
    };
    const char* names[3] = {"train", "val", "test"};
    const int sizes[3] = {n_train_, n_val_, n_test};
    for (int s = 0; s < 3; ++s) {
        if (regions[s].first_start < 0 || regions[s].last_start < regions[s].first_start) {
            throw ConfigError(std::string(names[s]) + " split of " + std::to_string(sizes[s]) +
                              " rows is too short for one (" + std::to_string(lookback) + "," +
                              std::to_string(horizon) + ") window");
        }
        for (int i = regions[s].first_start; i <= regions[s].last_start; i += stride) {
            starts_[s].push_back(i);
        }
    }
}

const std::vector<int>& WindowDataset::starts(Split split) const {
    return starts_[static_cast<int>(split)];
}

int WindowDataset::window_count(Split split) const {
    return static_cast<int>(starts(split).size());
}

int WindowDataset::window_start(Split split, int i) const {
    const auto& s = starts(split);
    if (i < 0 || i >= static_cast<int>(s.size())) {
        throw DimensionError("window index " + std::to_string(i) + " out of range");
    }
    return s[static_cast<std::size_t>(i)];
}

std::pair<Tensor, Tensor> WindowDataset::window(Split split, int i) const {
    const int start = window_start(split, i);
    return {copy_rows(scaled_, start, start + lookback_),
            copy_rows(scaled_, start + lookback_, start + lookback_ + horizon_)};
}

void WindowDataset::poke_scaled_row(int row, const std::vector<double>& values) {
    const int c = scaled_.cols();
    if (row < 0 || row >= scaled_.rows() || static_cast<int>(values.size()) != c) {
        throw DimensionError("poke_scaled_row: bad row or channel count");
    }
    auto& v = scaled_.data();
    for (int j = 0; j < c; ++j) v[static_cast<std::size_t>(row) * c + j] = values[j];
}

RawSeries synth_sine_trend(int length, int channels, const std::vector<double>& periods,
                           double trend_slope, double noise_sigma, std::uint64_t seed) {
    if (length < 1 || channels < 1) throw ConfigError("synth_sine_trend: empty series requested");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    RawSeries series;
    std::vector<double> values(static_cast<std::size_t>(length) * channels, 0.0);
    for (int i = 0; i < length; ++i) {
        for (int j = 0; j < channels; ++j) {
            double v = trend_slope * i;
            for (std::size_t k = 0; k < periods.size(); ++k) {
                const double phase = two_pi * j / channels + 0.5 * static_cast<double>(k);
                v += std::sin(two_pi * i / periods[k] + phase);
            }
            if (noise_sigma > 0.0) v += noise_sigma * noise(rng);
            values[static_cast<std::size_t>(i) * channels + j] = v;
        }
    }
    series.values = Tensor::from_values({length, channels}, std::move(values));
    for (int j = 0; j < channels; ++j) series.channel_names.push_back("c" + std::to_string(j));
    return series;
}

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "window_id,horizon_step,channel,y_true,y_pred\n";
    for (const auto& r : rows) {
        out << r.window_id << ',' << r.horizon_step << ',' << r.channel << ',';
        if (r.has_true) out << format_double(r.y_true);
        out << ',' << format_double(r.y_pred) << '\n';
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

} // namespace dpw
