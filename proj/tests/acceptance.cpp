// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 9 is skipped (not failed) when ETTh1.csv is absent.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dpw/checkpoint.hpp"
#include "dpw/data.hpp"
#include "dpw/model.hpp"
#include "dpw/ops.hpp"
#include "dpw/training.hpp"
#include "dpw/wavelet.hpp"

using namespace dpw;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("[SKIP] criterion %d: %s\n", criterion, detail.c_str());
    std::fflush(stdout);
}

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor random_series(std::mt19937_64& rng, int len, int channels) {
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    Tensor t = Tensor::zeros({len, channels});
    for (double& v : t.data()) v = dist(rng);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

// --- criterion 1: wavelet exactness --------------------------------------

void criterion_wavelet_exactness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len_dist(1, 257);
    std::uniform_int_distribution<int> ch_dist(1, 8);
    double worst_recon = 0.0, worst_parseval = 0.0;
    for (int rep = 0; rep < 500; ++rep) {
        Tensor x = random_series(rng, len_dist(rng), ch_dist(rng));
        wavelet::WaveletPyramid pyr = wavelet::build_pyramid(x, 3);
        for (std::size_t j = 0; j < pyr.levels.size(); ++j) {
            const Tensor padded = wavelet::pad_tail_even(pyr.scales_input[j]);
            const Tensor back = wavelet::idwt_step(pyr.levels[j].approx, pyr.levels[j].detail);
            worst_recon = std::max(worst_recon, max_abs_diff(back, padded));
            const double parent = wavelet::energy(padded);
            const double split =
                wavelet::energy(pyr.levels[j].approx) + wavelet::energy(pyr.levels[j].detail);
            worst_parseval =
                std::max(worst_parseval, std::abs(parent - split) / std::max(parent, 1e-30));
        }
    }
    const double secs = elapsed(t0);
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "wavelet exactness: 500 series, max recon err %.2e (<=1e-12), "
                  "max Parseval rel %.2e (<=1e-10), %.2fs (<5s)",
                  worst_recon, worst_parseval, secs);
    report(1, worst_recon <= 1e-12 && worst_parseval <= 1e-10 && secs < 5.0, detail);
}

// --- criterion 2: aliasing separation -------------------------------------

void criterion_aliasing() {
    Tensor alt = Tensor::zeros({64, 1});
    for (int i = 0; i < 64; ++i) alt.data()[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : -1;
    const auto pooled = wavelet::avg_pool_pyramid(alt, 1);
    const double pooled_energy = wavelet::energy(pooled[1]);
    auto [approx, detail] = wavelet::dwt_step(alt);
    const double in_energy = wavelet::energy(alt);
    const double detail_energy = wavelet::energy(detail);
    const double rel = std::abs(detail_energy - in_energy) / in_energy;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "aliasing: pooled level-1 energy %g (=0), Haar detail energy %.15g vs input "
                  "%g (rel %.2e), approx energy %g",
                  pooled_energy, detail_energy, in_energy, rel, wavelet::energy(approx));
    report(2, pooled_energy == 0.0 && rel <= 1e-12 && wavelet::energy(approx) == 0.0, buf);
}

// --- criterion 3: gradient fidelity ----------------------------------------

std::vector<std::pair<Tensor, Tensor>> random_batch(const ModelConfig& cfg, int n,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::pair<Tensor, Tensor>> batch;
    for (int i = 0; i < n; ++i) {
        Tensor x = Tensor::zeros({cfg.lookback, cfg.channels});
        Tensor y = Tensor::zeros({cfg.horizon, cfg.channels});
        for (double& v : x.data()) v = dist(rng);
        for (double& v : y.data()) v = dist(rng);
        batch.emplace_back(x, y);
    }
    return batch;
}

void criterion_gradient_fidelity() {
    const auto t0 = Clock::now();
    ModelConfig cfg;
    cfg.lookback = 16;
    cfg.horizon = 4;
    cfg.channels = 2;
    cfg.n_scales = 1;
    cfg.patch_len = 4;
    cfg.hidden_dim = 8;
    cfg.mixer_layers = 1;

    DpwModel full = init_params(cfg, 14);
    auto batch = random_batch(cfg, 2, 39);
    GradCheckReport full_report = grad_check(full, batch, 1e-5);

    ModelConfig linear_cfg = cfg;
    linear_cfg.use_local_path = false;
    DpwModel linear = init_params(linear_cfg, 16);
    GradCheckReport linear_report = grad_check(linear, batch, 1e-5);

    const double secs = elapsed(t0);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient fidelity: full model %lld params max rel err %.2e (<=1e-4), "
                  "linear-only %.2e (<=1e-6), %.1fs (<120s)",
                  static_cast<long long>(full_report.checked), full_report.max_rel_err,
                  linear_report.max_rel_err, secs);
    report(3,
           full_report.max_rel_err <= 1e-4 && linear_report.max_rel_err <= 1e-6 && secs < 120.0,
           buf);
}

// --- criterion 4: fusion simplex invariant ---------------------------------

void criterion_fusion_simplex() {
    ModelConfig cfg;
    cfg.lookback = 24;
    cfg.horizon = 6;
    cfg.channels = 3;
    cfg.n_scales = 2;
    cfg.patch_len = 8;
    cfg.hidden_dim = 8;
    cfg.mixer_layers = 1;
    DpwModel model = init_params(cfg, 5);
    std::vector<Tensor> params = model.parameters();
    AdamState adam(params);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    double worst = 0.0;
    bool nonneg = true;
    Tape no_grad(false);
    for (int step = 0; step < 100; ++step) {
        Tape tape;
        Tensor total;
        for (int b = 0; b < 4; ++b) {
            Tensor x = Tensor::zeros({cfg.lookback, cfg.channels});
            Tensor y = Tensor::zeros({cfg.horizon, cfg.channels});
            for (double& v : x.data()) v = dist(rng);
            for (double& v : y.data()) v = dist(rng);
            Tensor l = mse_loss(tape, forward(tape, x, model), y);
            total = total.defined() ? ops::add(tape, total, l) : l;
        }
        for (auto& p : params) p.zero_grad();
        tape.backward(total);
        adam.step(params, 1e-2, 0.9, 0.999, 1e-8);

        Tensor weights = ops::softmax(no_grad, model.fusion_logits, 0);
        for (int c = 0; c < cfg.channels; ++c) {
            double sum = 0.0;
            for (int j = 0; j <= cfg.n_scales; ++j) {
                const double w = weights.at(j, c);
                if (w < 0.0) nonneg = false;
                sum += w;
            }
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    }
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "fusion simplex: 100 training steps, weights nonnegative=%s, "
                  "worst |sum-1| = %.2e (<=1e-12)",
                  nonneg ? "yes" : "no", worst);
    report(4, nonneg && worst <= 1e-12, buf);
}

// --- criterion 5: RevIN anchor ---------------------------------------------

void criterion_revin_anchor() {
    ModelConfig cfg;
    cfg.lookback = 96;
    cfg.horizon = 24;
    cfg.channels = 3;
    cfg.n_scales = 3;
    cfg.patch_len = 16;
    cfg.hidden_dim = 16;
    cfg.mixer_layers = 2;
    DpwModel zero_model = make_model_skeleton(cfg);
    Tape no_grad(false);
    double worst = 0.0;
    for (double v : {0.0, 5.0, -3.25, 1e6, 1e-7}) {
        Tensor x = Tensor::full({cfg.lookback, cfg.channels}, v);
        Tensor y = forward(no_grad, x, zero_model);
        for (double out : y.data()) worst = std::max(worst, std::abs(out - v));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "RevIN anchor: zero-weight model, constant inputs, max |forecast - v| = %.2e "
                  "(<=1e-12)",
                  worst);
    report(5, worst <= 1e-12, buf);
}

// --- criterion 6: synthetic convergence ------------------------------------

void criterion_synthetic_convergence() {
    const auto t0 = Clock::now();
    RawSeries series = synth_sine_trend(5000, 3, {24.0, 96.0}, 0.0005, 0.1, 42);
    WindowDataset dataset(series, {0.7, 0.1, 0.2}, 96, 24);

    ModelConfig cfg;
    cfg.lookback = 96;
    cfg.horizon = 24;
    cfg.channels = 3;
    cfg.n_scales = 3;
    cfg.patch_len = 16;
    cfg.hidden_dim = 64;
    cfg.mixer_layers = 1;
    DpwModel model = init_params(cfg, 1);

    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 32;
    tc.max_epochs = 10;
    tc.patience = 5;
    tc.seed = 1;
    TrainReport result = train(model, dataset, tc);

    const double secs = elapsed(t0);
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "synthetic convergence: test MSE %.5f (<=0.05) after %zu epochs, %.1fs (<60s)",
                  result.test_mse, result.epochs.size(), secs);
    report(6, result.test_mse <= 0.05 && secs < 60.0, buf);
}

// --- criterion 7: complexity bound -----------------------------------------

double epoch_seconds(const ModelConfig& cfg,
                     const std::vector<std::pair<Tensor, Tensor>>& windows, int batches,
                     int batch_size, std::uint64_t seed) {
    DpwModel model = init_params(cfg, seed);
    std::vector<Tensor> params = model.parameters();
    AdamState adam(params);
    auto run_batch = [&](int b) {
        Tape tape;
        Tensor total;
        for (int i = 0; i < batch_size; ++i) {
            const auto& [x, y] = windows[static_cast<std::size_t>(b * batch_size + i)];
            Tensor l = mse_loss(tape, forward(tape, x, model), y);
            total = total.defined() ? ops::add(tape, total, l) : l;
        }
        Tensor loss = ops::mul_scalar(tape, total, 1.0 / batch_size);
        for (auto& p : params) p.zero_grad();
        tape.backward(loss);
        adam.step(params, 1e-4, 0.9, 0.999, 1e-8);
    };
    run_batch(0);
    const auto t0 = Clock::now();
    for (int b = 0; b < batches; ++b) run_batch(b);
    return elapsed(t0);
}

void criterion_complexity_bound() {
    const auto t0 = Clock::now();
    const std::vector<int> lengths{256, 512, 1024, 2048};
    const int batches = 3, batch_size = 16, channels = 2, horizon = 96;
    const int n_windows = batches * batch_size;

    std::vector<double> multi_times, single_times;
    for (int len : lengths) {
        RawSeries series = synth_sine_trend(len + horizon + n_windows + 8, channels,
                                            {24.0, 96.0}, 0.0005, 0.1, 7);
        std::vector<std::pair<Tensor, Tensor>> windows;
        for (int i = 0; i < n_windows; ++i) {
            Tensor x = Tensor::zeros({len, channels});
            Tensor y = Tensor::zeros({horizon, channels});
            for (int r = 0; r < len; ++r)
                for (int c = 0; c < channels; ++c)
                    x.data()[static_cast<std::size_t>(r) * channels + c] =
                        series.values.at(i + r, c);
            for (int r = 0; r < horizon; ++r)
                for (int c = 0; c < channels; ++c)
                    y.data()[static_cast<std::size_t>(r) * channels + c] =
                        series.values.at(i + len + r, c);
            windows.emplace_back(x, y);
        }
        ModelConfig multi_cfg;
        multi_cfg.lookback = len;
        multi_cfg.horizon = horizon;
        multi_cfg.channels = channels;
        multi_cfg.n_scales = 3;
        multi_cfg.patch_len = 16;
        multi_cfg.hidden_dim = 128;
        multi_cfg.mixer_layers = 2;
        ModelConfig single_cfg = multi_cfg;
        single_cfg.n_scales = 0;
        // interleaved repetitions so load/thermal drift hits both variants;
        // the minimum is the least-disturbed sample
        double multi = 1e300, single = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            multi = std::min(multi, epoch_seconds(multi_cfg, windows, batches, batch_size, 7));
            single = std::min(single, epoch_seconds(single_cfg, windows, batches, batch_size, 7));
        }
        multi_times.push_back(multi);
        single_times.push_back(single);
    }

    double worst_overhead = 0.0, worst_doubling = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        worst_overhead = std::max(worst_overhead, multi_times[i] / single_times[i]);
        if (i > 0) worst_doubling = std::max(worst_doubling, multi_times[i] / multi_times[i - 1]);
    }
    const double secs = elapsed(t0);
    char buf[224];
    std::snprintf(buf, sizeof(buf),
                  "complexity bound: worst N=3/N=0 ratio %.2f (<=2.5), worst t(2L)/t(L) %.2f "
                  "(<=2.6) over L in {256,512,1024,2048}, %.0fs (<300s)",
                  worst_overhead, worst_doubling, secs);
    report(7, worst_overhead <= 2.5 && worst_doubling <= 2.6 && secs < 300.0, buf);
}

// --- criterion 8: ablation directionality ----------------------------------

void criterion_ablation_direction() {
    RawSeries series = synth_sine_trend(2000, 2, {96.0, 24.0, 2.5}, 0.0005, 0.1, 11);
    WindowDataset dataset(series, {0.7, 0.1, 0.2}, 96, 24);

    auto run = [&](std::uint64_t seed, bool use_wavelet) {
        ModelConfig cfg;
        cfg.lookback = 96;
        cfg.horizon = 24;
        cfg.channels = 2;
        cfg.n_scales = 3;
        cfg.patch_len = 16;
        cfg.hidden_dim = 32;
        cfg.mixer_layers = 1;
        cfg.use_wavelet = use_wavelet;
        DpwModel model = init_params(cfg, seed);
        TrainConfig tc;
        tc.learning_rate = 1e-3;
        tc.batch_size = 32;
        tc.max_epochs = 3;
        tc.patience = 3;
        tc.seed = seed;
        return train(model, dataset, tc).test_mse;
    };

    bool all_positive = true;
    std::string margins;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const double full = run(seed, true);
        const double pooled = run(seed, false);
        if (!(pooled > full)) all_positive = false;
        char m[64];
        std::snprintf(m, sizeof(m), " seed%llu:%+.4f%%", static_cast<unsigned long long>(seed),
                      100.0 * (pooled - full) / full);
        margins += m;
    }
    report(8, all_positive,
           "ablation direction: pooling MSE exceeds Haar MSE on every seed;" + margins);
}

// --- criterion 9: ETTh1 benchmark sanity (optional) ------------------------

std::string find_etth1() {
    if (const char* env = std::getenv("DPW_ETTH1")) {
        if (std::filesystem::exists(env)) return env;
    }
    for (const char* candidate :
         {"data/ETTh1.csv", "ETTh1.csv", "../data/ETTh1.csv", "/root/data/ETTh1.csv"}) {
        if (std::filesystem::exists(candidate)) return candidate;
    }
    return "";
}

void criterion_etth1() {
    const std::string path = find_etth1();
    if (path.empty()) {
        report_skip(9, "ETTh1 benchmark sanity: ETTh1.csv not available "
                       "(set DPW_ETTH1 or place data/ETTh1.csv)");
        return;
    }
    const auto t0 = Clock::now();
    RawSeries series = load_csv(path);
    WindowDataset dataset(series, {0.7, 0.1, 0.2}, 96, 96);
    ModelConfig cfg;
    cfg.lookback = 96;
    cfg.horizon = 96;
    cfg.channels = series.channels();
    cfg.n_scales = 3;
    cfg.patch_len = 16;
    cfg.hidden_dim = 128;
    cfg.mixer_layers = 2;
    DpwModel model = init_params(cfg, 1);
    TrainConfig tc;
    tc.learning_rate = 5e-4;
    tc.batch_size = 32;
    tc.max_epochs = 10;
    tc.patience = 5;
    tc.seed = 1;
    TrainReport result = train(model, dataset, tc);
    const double secs = elapsed(t0);
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "ETTh1 sanity: L=96 T=96 test MSE %.4f (<=0.45, paper 0.373), %.0fs (<1800s)",
                  result.test_mse, secs);
    report(9, result.test_mse <= 0.45 && secs < 1800.0, buf);
}

} // namespace

int main() {
    criterion_wavelet_exactness();
    criterion_aliasing();
    criterion_gradient_fidelity();
    criterion_fusion_simplex();
    criterion_revin_anchor();
    criterion_complexity_bound(); // timing-sensitive: before the long training runs
    criterion_synthetic_convergence();
    criterion_ablation_direction();
    criterion_etth1();
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", failures);
    return 1;
}
