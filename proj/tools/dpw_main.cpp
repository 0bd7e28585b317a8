// dpw: train / evaluate / forecast / inspect-pyramid / grad-check / bench / synth
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// divergence, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dpw/checkpoint.hpp"
#include "dpw/data.hpp"
#include "dpw/model.hpp"
#include "dpw/ops.hpp"
#include "dpw/training.hpp"
#include "dpw/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpw;

namespace {

// ---------------------------------------------------------------------------
// config file + manifest helpers

std::uint64_t fnv1a_bytes(const char* data, std::size_t n, std::uint64_t h) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

std::string content_hash(const std::vector<std::string>& files, const std::string& extra) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;
        char buf[65536];
        while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
            h = fnv1a_bytes(buf, static_cast<std::size_t>(in.gcount()), h);
            if (!in) break;
        }
    }
    h = fnv1a_bytes(extra.data(), extra.size(), h);
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string normalize_key(std::string key) {
    for (char& c : key)
        if (c == '-') c = '_';
    return key;
}

/// Flat `key value` (or `key = value`) file; '#' starts a comment.
std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value, word;
        while (ls >> word) {
            if (!value.empty()) value += ' ';
            value += word;
        }
        if (!value.empty() && value.front() == '=') value.erase(0, value.find_first_not_of("= "));
        if (value.empty()) {
            throw ConfigError("config file '" + path + "' line " + std::to_string(lineno) +
                              ": key '" + key + "' has no value");
        }
        kv[normalize_key(key)] = value;
    }
    return kv;
}

/// CLI > file > defaults: unset CLI options take their value from the file.
class KvFallback {
public:
    explicit KvFallback(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    template <typename T>
    void apply(const CLI::Option* opt, const std::string& key, T& target) {
        known_.insert(key);
        if (!kv_.count(key)) return;
        if (opt != nullptr && opt->count() > 0) return; // CLI wins
        std::istringstream ss(kv_.at(key));
        T value;
        if constexpr (std::is_same_v<T, std::string>) {
            value = kv_.at(key);
        } else if constexpr (std::is_same_v<T, bool>) {
            std::string s = kv_.at(key);
            value = (s == "1" || s == "true" || s == "on" || s == "yes");
        } else {
            if (!(ss >> value)) bad_.push_back(key + " = '" + kv_.at(key) + "'");
        }
        target = value;
    }

    void finish() const {
        std::vector<std::string> problems = bad_;
        for (const auto& [key, value] : kv_) {
            if (!known_.count(key)) problems.push_back("unknown key '" + key + "'");
        }
        if (!problems.empty()) {
            std::string msg = "config file problems:";
            for (const auto& p : problems) msg += "\n  - " + p;
            throw ConfigError(msg);
        }
    }

private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> known_;
    std::vector<std::string> bad_;
};

SplitRatios parse_split(const std::string& text) {
    SplitRatios r;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> r.train >> c1 >> r.val >> c2 >> r.test) || c1 != ',' || c2 != ',') {
        throw ConfigError("--split expects three comma-separated ratios, got '" + text + "'");
    }
    return r;
}

std::vector<double> parse_doubles(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError(std::string(flag) + ": cannot parse '" + cell + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(flag) + ": empty list");
    return out;
}

std::vector<int> parse_ints(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (double v : parse_doubles(text, flag)) out.push_back(static_cast<int>(v));
    return out;
}

// ---------------------------------------------------------------------------
// shared option bundles

struct ModelOpts {
    int lookback = 96;
    int horizon = 96;
    int scales = 3;
    int patch_len = 16;
    int hidden_dim = 128;
    int mixer_layers = 2;
    std::vector<std::string> ablate;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--lookback", lookback, "look-back window length L");
        cmd->add_option("--horizon", horizon, "forecast horizon T");
        cmd->add_option("--scales", scales, "wavelet pyramid depth N");
        cmd->add_option("--patch-len", patch_len, "patch length P");
        cmd->add_option("--hidden-dim", hidden_dim, "mixer hidden dimension D");
        cmd->add_option("--mixer-layers", mixer_layers, "mixer layers per scale block");
        cmd->add_option("--ablate", ablate,
                        "disable a component: no-wavelet|no-global|no-local|no-fusion");
    }

    ModelConfig resolve(int channels) const {
        ModelConfig cfg;
        cfg.lookback = lookback;
        cfg.horizon = horizon;
        cfg.channels = channels;
        cfg.n_scales = scales;
        cfg.patch_len = patch_len;
        cfg.hidden_dim = hidden_dim;
        cfg.mixer_layers = mixer_layers;
        for (const auto& a : ablate) {
            if (a == "no-wavelet") cfg.use_wavelet = false;
            else if (a == "no-global") cfg.use_global_path = false;
            else if (a == "no-local") cfg.use_local_path = false;
            else if (a == "no-fusion") cfg.use_adaptive_fusion = false;
            else
                throw ConfigError("--ablate: unknown component '" + a +
                                  "' (expected no-wavelet|no-global|no-local|no-fusion)");
        }
        return cfg;
    }
};

json config_to_json(const ModelConfig& cfg) {
    return json{{"lookback", cfg.lookback},
                {"horizon", cfg.horizon},
                {"channels", cfg.channels},
                {"n_scales", cfg.n_scales},
                {"patch_len", cfg.patch_len},
                {"hidden_dim", cfg.hidden_dim},
                {"mixer_layers", cfg.mixer_layers},
                {"use_wavelet", cfg.use_wavelet},
                {"use_global_path", cfg.use_global_path},
                {"use_local_path", cfg.use_local_path},
                {"use_adaptive_fusion", cfg.use_adaptive_fusion}};
}

void write_json(const std::string& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << value.dump(2) << '\n';
}

Split parse_split_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + name + "' (expected train|val|test)");
}

std::vector<PredictionRow> predict_split(const DpwModel& model, const WindowDataset& dataset,
                                         Split split, const DatasetScaler& scaler,
                                         const RawSeries& series) {
    Tape no_grad(false);
    std::vector<PredictionRow> rows;
    const int n = dataset.window_count(split);
    for (int i = 0; i < n; ++i) {
        auto [x, y] = dataset.window(split, i);
        Tensor pred_scaled = forward(no_grad, x, model);
        Tensor pred = invert_scaler(pred_scaled, scaler);
        const int start = dataset.window_start(split, i);
        for (int t = 0; t < dataset.horizon(); ++t) {
            for (int c = 0; c < dataset.channels(); ++c) {
                const double truth = series.values.at(start + dataset.lookback() + t, c);
                rows.push_back({start, t, c, truth, true, pred.at(t, c)});
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// subcommands

struct TrainArgs {
    std::string data;
    std::string out = "runs/latest";
    std::string split = "0.7,0.1,0.2";
    ModelOpts model;
    double lr = 1e-3;
    int batch_size = 32;
    int max_epochs = 10;
    int patience = 5;
    int stride = 1;
    std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& args) {
    if (args.data.empty()) throw ConfigError("--data is required");
    RawSeries series = load_csv(args.data);
    ModelConfig cfg = args.model.resolve(series.channels());
    const SplitRatios ratios = parse_split(args.split);

    TrainConfig tc;
    tc.learning_rate = args.lr;
    tc.batch_size = args.batch_size;
    tc.max_epochs = args.max_epochs;
    tc.patience = args.patience;
    tc.seed = args.seed;

    auto model_errors = cfg.validate();
    auto train_errors = tc.validate();
    model_errors.insert(model_errors.end(), train_errors.begin(), train_errors.end());
    if (!model_errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : model_errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }

    WindowDataset dataset(series, ratios, cfg.lookback, cfg.horizon, args.stride);
    DpwModel model = init_params(cfg, args.seed);

    fs::create_directories(args.out);
    const std::string ckpt_path = args.out + "/checkpoint.txt";
    const std::string log_path = args.out + "/train_log.csv";
    const std::string summary_path = args.out + "/summary.json";
    const std::string manifest_path = args.out + "/manifest.json";

    std::cout << "training on " << args.data << ": " << series.length() << " rows, "
              << series.channels() << " channels, "
              << dataset.window_count(Split::train) << " train windows\n";

    TrainReport report = train(model, dataset, tc, [](int epoch, const DpwModel&) {
        (void)epoch;
    });
    for (const auto& e : report.epochs) {
        std::cout << "epoch " << e.epoch << ": train_mse=" << e.train_mse
                  << " val_mse=" << e.val_mse << " lr=" << e.lr << " (" << e.seconds << "s)\n";
    }
    std::cout << "best epoch " << report.best_epoch << " val_mse=" << report.best_val_mse
              << "; test_mse=" << report.test_mse << " test_mae=" << report.test_mae << '\n';

    save_checkpoint(ckpt_path, {model, dataset.scaler()});

    {
        std::ofstream log(log_path);
        log << "epoch,train_mse,val_mse,lr,seconds\n";
        char buf[160];
        for (const auto& e : report.epochs) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.6f\n", e.epoch, e.train_mse,
                          e.val_mse, e.lr, e.seconds);
            log << buf;
        }
    }

    write_json(summary_path, json{{"best_epoch", report.best_epoch},
                                  {"best_val_mse", report.best_val_mse},
                                  {"final_train_mse", report.final_train_mse},
                                  {"test_mse", report.test_mse},
                                  {"test_mae", report.test_mae},
                                  {"epochs_run", report.epochs.size()},
                                  {"early_stopped", report.early_stopped}});

    json manifest;
    manifest["command"] = "train";
    manifest["seed"] = args.seed;
    manifest["data"] = args.data;
    manifest["split"] = args.split;
    manifest["stride"] = args.stride;
    manifest["model"] = config_to_json(cfg);
    manifest["pyramid"] = cfg.use_wavelet ? "haar" : "average-pooling";
    manifest["train"] = json{{"learning_rate", tc.learning_rate},
                             {"batch_size", tc.batch_size},
                             {"max_epochs", tc.max_epochs},
                             {"patience", tc.patience}};
    manifest["artifacts"] = json{{"checkpoint", ckpt_path},
                                 {"epoch_log", log_path},
                                 {"summary", summary_path}};
    manifest["input_hash"] = content_hash({args.data}, config_to_json(cfg).dump() + args.split +
                                                           std::to_string(args.seed));
    write_json(manifest_path, manifest);
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string split = "0.7,0.1,0.2";
    std::string eval_split = "test";
    std::string out = "runs/latest";
    int stride = 1;
};

int cmd_eval(const EvalArgs& args) {
    if (args.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    if (args.data.empty()) throw ConfigError("--data is required");
    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    RawSeries series = load_csv(args.data);
    if (series.channels() != ckpt.model.config.channels) {
        throw ConfigError("checkpoint expects " + std::to_string(ckpt.model.config.channels) +
                          " channels but '" + args.data + "' has " +
                          std::to_string(series.channels()));
    }
    const Split split = parse_split_name(args.eval_split);
    WindowDataset dataset(series, parse_split(args.split), ckpt.model.config.lookback,
                          ckpt.model.config.horizon, ckpt.scaler, args.stride);

    auto [mse, mae] = evaluate_mse_mae(ckpt.model, dataset, split);
    char line[96];
    std::snprintf(line, sizeof(line), "%s MSE=%.9f MAE=%.9f\n", args.eval_split.c_str(), mse, mae);
    std::cout << line;

    fs::create_directories(args.out);
    const std::string pred_path = args.out + "/predictions_" + args.eval_split + ".csv";
    write_predictions_csv(pred_path,
                          predict_split(ckpt.model, dataset, split, ckpt.scaler, series));
    write_json(args.out + "/metrics_" + args.eval_split + ".json",
               json{{"split", args.eval_split}, {"mse", mse}, {"mae", mae},
                    {"windows", dataset.window_count(split)}});
    return 0;
}

struct ForecastArgs {
    std::string checkpoint;
    std::string data;
    std::string out = "forecast.csv";
    int start_row = -1; // -1: latest full look-back window
};

int cmd_forecast(const ForecastArgs& args) {
    if (args.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    if (args.data.empty()) throw ConfigError("--data is required");
    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    RawSeries series = load_csv(args.data);
    if (series.channels() != ckpt.model.config.channels) {
        throw ConfigError("checkpoint expects " + std::to_string(ckpt.model.config.channels) +
                          " channels but '" + args.data + "' has " +
                          std::to_string(series.channels()));
    }
    const int lookback = ckpt.model.config.lookback;
    const int horizon = ckpt.model.config.horizon;
    const int start = args.start_row >= 0 ? args.start_row : series.length() - lookback;
    if (start < 0 || start + lookback > series.length()) {
        throw DataError("insufficient history: need rows [" + std::to_string(start) + "," +
                        std::to_string(start + lookback) + ") but '" + args.data + "' has " +
                        std::to_string(series.length()) + " rows");
    }

    Tensor scaled = apply_scaler(series.values, ckpt.scaler);
    Tensor x = Tensor::zeros({lookback, series.channels()});
    for (int i = 0; i < lookback; ++i)
        for (int j = 0; j < series.channels(); ++j)
            x.data()[static_cast<std::size_t>(i) * series.channels() + j] =
                scaled.at(start + i, j);

    Tape no_grad(false);
    Tensor pred = invert_scaler(forward(no_grad, x, ckpt.model), ckpt.scaler);

    std::vector<PredictionRow> rows;
    for (int t = 0; t < horizon; ++t) {
        for (int c = 0; c < series.channels(); ++c) {
            PredictionRow row;
            row.window_id = start;
            row.horizon_step = t;
            row.channel = c;
            row.y_pred = pred.at(t, c);
            const int truth_row = start + lookback + t;
            if (truth_row < series.length()) {
                row.y_true = series.values.at(truth_row, c);
                row.has_true = true;
            }
            rows.push_back(row);
        }
    }
    if (!args.out.empty()) {
        if (auto dir = fs::path(args.out).parent_path(); !dir.empty()) fs::create_directories(dir);
    }
    write_predictions_csv(args.out, rows);
    std::cout << "wrote " << rows.size() << " prediction rows to " << args.out << '\n';
    return 0;
}

struct InspectArgs {
    std::string data;
    int scales = 3;
    std::string out = "pyramid";
};

int cmd_inspect_pyramid(const InspectArgs& args) {
    if (args.data.empty()) throw ConfigError("--data is required");
    RawSeries series = load_csv(args.data);
    wavelet::WaveletPyramid pyr = wavelet::build_pyramid(series.values, args.scales);

    fs::create_directories(args.out);
    auto dump = [&](const Tensor& t, const std::string& name) {
        RawSeries level;
        level.values = t;
        level.channel_names = series.channel_names;
        write_csv(args.out + "/" + name + ".csv", level);
    };

    std::cout << "level,parent_energy,approx_energy,detail_energy,rel_err\n";
    for (std::size_t j = 0; j < pyr.levels.size(); ++j) {
        dump(pyr.levels[j].approx, "level" + std::to_string(j + 1) + "_approx");
        dump(pyr.levels[j].detail, "level" + std::to_string(j + 1) + "_detail");
        const double parent = wavelet::energy(wavelet::pad_tail_even(pyr.scales_input[j]));
        const double ae = wavelet::energy(pyr.levels[j].approx);
        const double de = wavelet::energy(pyr.levels[j].detail);
        const double rel = std::abs(parent - (ae + de)) / std::max(parent, 1e-300);
        char line[160];
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.3g\n", j + 1, parent, ae, de,
                      rel);
        std::cout << line;
    }
    std::cout << "wrote per-level CSVs to " << args.out << "/\n";
    return 0;
}

struct GradCheckArgs {
    int lookback = 16, horizon = 4, channels = 2, scales = 1, patch_len = 4, hidden_dim = 8,
        mixer_layers = 1;
    int batch = 2;
    double step = 1e-5;
    double tol = 1e-4;
    std::uint64_t seed = 1;
    std::vector<std::string> ablate;
};

int cmd_grad_check(const GradCheckArgs& args) {
    ModelConfig cfg;
    cfg.lookback = args.lookback;
    cfg.horizon = args.horizon;
    cfg.channels = args.channels;
    cfg.n_scales = args.scales;
    cfg.patch_len = args.patch_len;
    cfg.hidden_dim = args.hidden_dim;
    cfg.mixer_layers = args.mixer_layers;
    ModelOpts opts;
    opts.ablate = args.ablate;
    ModelConfig with_ablations = opts.resolve(args.channels);
    cfg.use_wavelet = with_ablations.use_wavelet;
    cfg.use_global_path = with_ablations.use_global_path;
    cfg.use_local_path = with_ablations.use_local_path;
    cfg.use_adaptive_fusion = with_ablations.use_adaptive_fusion;

    DpwModel model = init_params(cfg, args.seed);
    std::mt19937_64 rng(args.seed + 1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::pair<Tensor, Tensor>> batch;
    for (int i = 0; i < args.batch; ++i) {
        Tensor x = Tensor::zeros({cfg.lookback, cfg.channels});
        Tensor y = Tensor::zeros({cfg.horizon, cfg.channels});
        for (double& v : x.data()) v = dist(rng);
        for (double& v : y.data()) v = dist(rng);
        batch.emplace_back(x, y);
    }
    GradCheckReport report = grad_check(model, batch, args.step);
    std::cout << "checked " << report.checked << " parameters, max rel err "
              << report.max_rel_err << " at " << report.worst_param << "[" << report.worst_index
              << "]\n";
    if (report.max_rel_err <= args.tol) {
        std::cout << "PASS (tol " << args.tol << ")\n";
        return 0;
    }
    std::cout << "FAIL (tol " << args.tol << ")\n";
    return 1;
}

struct BenchArgs {
    std::string lengths = "256,512,1024,2048";
    int scales = 3;
    int horizon = 96;
    int channels = 2;
    int patch_len = 16;
    int hidden_dim = 128;
    int mixer_layers = 2;
    int batches = 3;
    int batch_size = 16;
    std::uint64_t seed = 7;
    std::string out;
};

double epoch_seconds(const ModelConfig& cfg, const std::vector<std::pair<Tensor, Tensor>>& windows,
                     int batches, int batch_size, std::uint64_t seed) {
    DpwModel model = init_params(cfg, seed);
    std::vector<Tensor> params = model.parameters();
    AdamState adam(params);
    auto run_batch = [&](int b) {
        Tape tape;
        Tensor total;
        for (int i = 0; i < batch_size; ++i) {
            const auto& [x, y] = windows[static_cast<std::size_t>(b * batch_size + i)];
            Tensor loss_i = mse_loss(tape, forward(tape, x, model), y);
            total = total.defined() ? ops::add(tape, total, loss_i) : loss_i;
        }
        Tensor loss = ops::mul_scalar(tape, total, 1.0 / batch_size);
        for (auto& p : params) p.zero_grad();
        tape.backward(loss);
        adam.step(params, 1e-4, 0.9, 0.999, 1e-8);
    };
    run_batch(0); // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int b = 0; b < batches; ++b) run_batch(b);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

int cmd_bench(const BenchArgs& args) {
    const std::vector<int> lengths = parse_ints(args.lengths, "--lengths");
    for (std::size_t i = 1; i < lengths.size(); ++i) {
        if (lengths[i] <= lengths[i - 1]) throw ConfigError("--lengths must be ascending");
    }
    const int n_windows = args.batches * args.batch_size;

    std::ostringstream csv;
    csv << "length,multi_scale_seconds,single_scale_seconds,multi_over_single,doubling_ratio\n";
    std::cout << "length  multi(s)  single(s)  multi/single  t(L)/t(L/2)\n";
    double prev_multi = -1.0;
    int prev_len = 0;
    for (int len : lengths) {
        RawSeries series = synth_sine_trend(len + args.horizon + n_windows + 8, args.channels,
                                            {24.0, 96.0}, 0.0005, 0.1, args.seed);
        std::vector<std::pair<Tensor, Tensor>> windows;
        for (int i = 0; i < n_windows; ++i) {
            Tensor x = Tensor::zeros({len, args.channels});
            Tensor y = Tensor::zeros({args.horizon, args.channels});
            for (int r = 0; r < len; ++r)
                for (int c = 0; c < args.channels; ++c)
                    x.data()[static_cast<std::size_t>(r) * args.channels + c] =
                        series.values.at(i + r, c);
            for (int r = 0; r < args.horizon; ++r)
                for (int c = 0; c < args.channels; ++c)
                    y.data()[static_cast<std::size_t>(r) * args.channels + c] =
                        series.values.at(i + len + r, c);
            windows.emplace_back(x, y);
        }

        ModelConfig cfg;
        cfg.lookback = len;
        cfg.horizon = args.horizon;
        cfg.channels = args.channels;
        cfg.n_scales = args.scales;
        cfg.patch_len = args.patch_len;
        cfg.hidden_dim = args.hidden_dim;
        cfg.mixer_layers = args.mixer_layers;
        const double multi = epoch_seconds(cfg, windows, args.batches, args.batch_size, args.seed);
        cfg.n_scales = 0;
        const double single =
            epoch_seconds(cfg, windows, args.batches, args.batch_size, args.seed);

        const bool doubled = prev_multi > 0.0 && len == 2 * prev_len;
        const double doubling = doubled ? multi / prev_multi : 0.0;
        char line[160];
        std::snprintf(line, sizeof(line), "%6d  %8.3f  %9.3f  %12.3f", len, multi, single,
                      multi / single);
        std::cout << line;
        if (doubled) {
            std::snprintf(line, sizeof(line), "  %11.3f\n", doubling);
            std::cout << line;
        } else {
            std::cout << "            -\n";
        }
        csv << len << ',' << multi << ',' << single << ',' << multi / single << ',';
        if (doubled) csv << doubling;
        csv << '\n';
        prev_multi = multi;
        prev_len = len;
    }
    if (!args.out.empty()) {
        if (auto dir = fs::path(args.out).parent_path(); !dir.empty()) fs::create_directories(dir);
        std::ofstream out(args.out);
        out << csv.str();
        std::cout << "wrote " << args.out << '\n';
    }
    return 0;
}

struct SynthArgs {
    std::string out;
    int length = 5000;
    int channels = 3;
    std::string periods = "24,96";
    double trend = 0.0005;
    double noise = 0.1;
    std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& args) {
    if (args.out.empty()) throw ConfigError("--out is required");
    RawSeries series = synth_sine_trend(args.length, args.channels,
                                        parse_doubles(args.periods, "--periods"), args.trend,
                                        args.noise, args.seed);
    if (auto dir = fs::path(args.out).parent_path(); !dir.empty()) fs::create_directories(dir);
    write_csv(args.out, series);
    std::cout << "wrote " << args.length << "x" << args.channels << " series to " << args.out
              << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DPWMixer long-term time series forecasting engine"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat key-value config file (CLI flags win)")
        ->expected(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "fit a model and write a checkpoint");
    auto* t_data = train_cmd->add_option("--data", train_args.data, "input CSV");
    auto* t_out = train_cmd->add_option("--out", train_args.out, "output directory");
    auto* t_split = train_cmd->add_option("--split", train_args.split, "train,val,test ratios");
    train_args.model.add_flags(train_cmd);
    auto* t_lr = train_cmd->add_option("--lr", train_args.lr, "learning rate");
    auto* t_bs = train_cmd->add_option("--batch-size", train_args.batch_size, "batch size");
    auto* t_ep = train_cmd->add_option("--max-epochs", train_args.max_epochs, "epoch cap");
    auto* t_pt = train_cmd->add_option("--patience", train_args.patience, "early stop patience");
    auto* t_st = train_cmd->add_option("--stride", train_args.stride, "window stride");
    auto* t_seed = train_cmd->add_option("--seed", train_args.seed, "RNG seed");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_args.data, "input CSV")->required();
    eval_cmd->add_option("--split", eval_args.split, "train,val,test ratios");
    eval_cmd->add_option("--eval-split", eval_args.eval_split, "train|val|test");
    eval_cmd->add_option("--out", eval_args.out, "output directory");
    eval_cmd->add_option("--stride", eval_args.stride, "window stride");

    ForecastArgs fc_args;
    auto* fc_cmd = app.add_subcommand("forecast", "forecast T steps from a history window");
    fc_cmd->add_option("--checkpoint", fc_args.checkpoint, "checkpoint file")->required();
    fc_cmd->add_option("--data", fc_args.data, "input CSV")->required();
    fc_cmd->add_option("--start-row", fc_args.start_row,
                       "first history row (default: latest window)");
    fc_cmd->add_option("--out", fc_args.out, "output CSV");

    InspectArgs in_args;
    auto* in_cmd = app.add_subcommand("inspect-pyramid", "dump the wavelet pyramid of a CSV");
    in_cmd->add_option("--data", in_args.data, "input CSV")->required();
    in_cmd->add_option("--scales", in_args.scales, "pyramid depth");
    in_cmd->add_option("--out", in_args.out, "output directory");

    GradCheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference gradient verification");
    gc_cmd->add_option("--lookback", gc_args.lookback);
    gc_cmd->add_option("--horizon", gc_args.horizon);
    gc_cmd->add_option("--channels", gc_args.channels);
    gc_cmd->add_option("--scales", gc_args.scales);
    gc_cmd->add_option("--patch-len", gc_args.patch_len);
    gc_cmd->add_option("--hidden-dim", gc_args.hidden_dim);
    gc_cmd->add_option("--mixer-layers", gc_args.mixer_layers);
    gc_cmd->add_option("--batch", gc_args.batch);
    gc_cmd->add_option("--step", gc_args.step);
    gc_cmd->add_option("--tol", gc_args.tol);
    gc_cmd->add_option("--seed", gc_args.seed);
    gc_cmd->add_option("--ablate", gc_args.ablate);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "per-epoch wall-time scaling");
    bench_cmd->add_option("--lengths", bench_args.lengths, "ascending look-back lengths");
    bench_cmd->add_option("--scales", bench_args.scales);
    bench_cmd->add_option("--horizon", bench_args.horizon);
    bench_cmd->add_option("--channels", bench_args.channels);
    bench_cmd->add_option("--patch-len", bench_args.patch_len);
    bench_cmd->add_option("--hidden-dim", bench_args.hidden_dim);
    bench_cmd->add_option("--mixer-layers", bench_args.mixer_layers);
    bench_cmd->add_option("--batches", bench_args.batches, "batches per timed epoch");
    bench_cmd->add_option("--batch-size", bench_args.batch_size);
    bench_cmd->add_option("--seed", bench_args.seed);
    bench_cmd->add_option("--out", bench_args.out, "CSV report path");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a sine+trend+noise CSV");
    synth_cmd->add_option("--out", synth_args.out, "output CSV")->required();
    synth_cmd->add_option("--length", synth_args.length);
    synth_cmd->add_option("--channels", synth_args.channels);
    synth_cmd->add_option("--periods", synth_args.periods, "comma-separated periods");
    synth_cmd->add_option("--trend", synth_args.trend, "trend slope");
    synth_cmd->add_option("--noise", synth_args.noise, "noise sigma");
    synth_cmd->add_option("--seed", synth_args.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) {
            KvFallback kv(read_kv_config(config_path));
            kv.apply(t_data, "data", train_args.data);
            kv.apply(t_out, "out", train_args.out);
            kv.apply(t_split, "split", train_args.split);
            kv.apply(train_cmd->get_option("--lookback"), "lookback", train_args.model.lookback);
            kv.apply(train_cmd->get_option("--horizon"), "horizon", train_args.model.horizon);
            kv.apply(train_cmd->get_option("--scales"), "scales", train_args.model.scales);
            kv.apply(train_cmd->get_option("--patch-len"), "patch_len",
                     train_args.model.patch_len);
            kv.apply(train_cmd->get_option("--hidden-dim"), "hidden_dim",
                     train_args.model.hidden_dim);
            kv.apply(train_cmd->get_option("--mixer-layers"), "mixer_layers",
                     train_args.model.mixer_layers);
            std::string ablate_value;
            kv.apply(train_cmd->get_option("--ablate"), "ablate", ablate_value);
            if (!ablate_value.empty()) {
                std::stringstream ss(ablate_value);
                std::string item;
                while (ss >> item) train_args.model.ablate.push_back(item);
            }
            kv.apply(t_lr, "lr", train_args.lr);
            kv.apply(t_bs, "batch_size", train_args.batch_size);
            kv.apply(t_ep, "max_epochs", train_args.max_epochs);
            kv.apply(t_pt, "patience", train_args.patience);
            kv.apply(t_st, "stride", train_args.stride);
            kv.apply(t_seed, "seed", train_args.seed);
            kv.finish();
        }

        if (train_cmd->parsed()) return cmd_train(train_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (fc_cmd->parsed()) return cmd_forecast(fc_args);
        if (in_cmd->parsed()) return cmd_inspect_pyramid(in_args);
        if (gc_cmd->parsed()) return cmd_grad_check(gc_args);
        if (bench_cmd->parsed()) return cmd_bench(bench_args);
        if (synth_cmd->parsed()) return cmd_synth(synth_args);
        std::cerr << app.help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
