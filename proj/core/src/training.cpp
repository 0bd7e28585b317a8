#include "dpw/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "dpw/ops.hpp"

namespace dpw {

std::vector<std::string> TrainConfig::validate() const {
    std::vector<std::string> errors;
    if (learning_rate <= 0.0) errors.push_back("learning_rate must be positive");
    if (batch_size < 1) errors.push_back("batch_size must be >= 1");
    if (max_epochs < 1) errors.push_back("max_epochs must be >= 1");
    if (patience < 1) errors.push_back("patience must be >= 1");
    if (patience > max_epochs) errors.push_back("patience must be <= max_epochs");
    if (eta_min < 0.0) errors.push_back("eta_min must be >= 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0) errors.push_back("adam_beta1 must be in (0,1)");
    if (adam_beta2 <= 0.0 || adam_beta2 >= 1.0) errors.push_back("adam_beta2 must be in (0,1)");
    if (adam_eps <= 0.0) errors.push_back("adam_eps must be positive");
    if (worker_threads < 1) errors.push_back("worker_threads must be >= 1");
    return errors;
}

Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("mse_loss: shapes " + pred.shape_str() + " and " +
                             target.shape_str() + " differ");
    }
    Tensor diff = ops::sub(tape, pred, target);
    return ops::mean(tape, ops::mul(tape, diff, diff));
}

double mse_metric(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("mse_metric: shapes " + pred.shape_str() + " and " +
                             target.shape_str() + " differ");
    }
    const auto& p = pred.data();
    const auto& t = target.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    return acc / static_cast<double>(p.size());
}

double mae_metric(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("mae_metric: shapes " + pred.shape_str() + " and " +
                             target.shape_str() + " differ");
    }
    const auto& p = pred.data();
    const auto& t = target.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
    return acc / static_cast<double>(p.size());
}

AdamState::AdamState(const std::vector<Tensor>& params) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamState::step(std::vector<Tensor>& params, double lr, double beta1, double beta2,
                     double eps) {
    if (params.size() != m_.size()) {
        throw ContractError("AdamState: parameter list changed since construction");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].data();
        const auto* g = params[k].grad_if();
        if (!g) continue;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = (*g)[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double cosine_lr(int epoch, int max_epochs, double lr0, double eta_min) {
    if (epoch < 0 || epoch > max_epochs) {
        throw ContractError("cosine_lr: epoch " + std::to_string(epoch) + " outside [0," +
                            std::to_string(max_epochs) + "]");
    }
    constexpr double pi = 3.14159265358979323846;
    const double frac = static_cast<double>(epoch) / static_cast<double>(max_epochs);
    return eta_min + (lr0 - eta_min) * (1.0 + std::cos(pi * frac)) / 2.0;
}

double evaluate_mse(const DpwModel& model, const WindowDataset& dataset, Split split,
                    int threads) {
    return evaluate_mse_mae(model, dataset, split, threads).first;
}

std::pair<double, double> evaluate_mse_mae(const DpwModel& model, const WindowDataset& dataset,
                                           Split split, int threads) {
    const int n = dataset.window_count(split);
    if (n == 0) throw ConfigError("evaluate: split has no windows");
    double mse[2] = {0.0, 0.0};
    double mae[2] = {0.0, 0.0};
    std::int64_t count[2] = {0, 0};
    auto accumulate = [&](int parity) {
        Tape no_grad(false);
        for (int i = parity; i < n; i += 2) {
            auto [x, y] = dataset.window(split, i);
            Tensor pred = forward(no_grad, x, model);
            const auto& pv = pred.data();
            const auto& yv = y.data();
            for (std::size_t k = 0; k < pv.size(); ++k) {
                const double d = pv[k] - yv[k];
                mse[parity] += d * d;
                mae[parity] += std::abs(d);
            }
            count[parity] += static_cast<std::int64_t>(pv.size());
        }
    };
    if (threads > 1 && n > 1) {
        std::thread worker([&]() { accumulate(1); });
        accumulate(0);
        worker.join();
    } else {
        accumulate(0);
        accumulate(1);
    }
    const double total = static_cast<double>(count[0] + count[1]);
    return {(mse[0] + mse[1]) / total, (mae[0] + mae[1]) / total};
}

namespace {

std::vector<Tensor> snapshot(const std::vector<Tensor>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.clone());
    return out;
}

void restore(std::vector<Tensor>& params, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].data() = snap[i].data();
}

DpwModel clone_model(const DpwModel& model) {
    DpwModel copy = make_model_skeleton(model.config);
    auto src = model.named_tensors();
    auto dst = copy.named_tensors();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].second.data() = src[i].second.data();
    return copy;
}

// One shard of a batch: forward+backward of the unscaled loss sum on its own
// tape. The caller reduces shard gradients in a fixed order.
double run_shard(const DpwModel& model, const WindowDataset& dataset,
                 const std::vector<int>& order, int begin, int end) {
    Tape tape;
    Tensor total;
    for (int i = begin; i < end; ++i) {
        auto [x, y] = dataset.window(Split::train, order[static_cast<std::size_t>(i)]);
        Tensor loss_i = mse_loss(tape, forward(tape, x, model), y);
        total = total.defined() ? ops::add(tape, total, loss_i) : loss_i;
    }
    if (!total.defined()) return 0.0;
    tape.backward(total);
    return total.value();
}

} // namespace

TrainReport train(DpwModel& model, const WindowDataset& dataset, const TrainConfig& config,
                  const std::function<void(int, const DpwModel&)>& epoch_hook) {
    const auto errors = config.validate();
    if (!errors.empty()) {
        std::string msg = "invalid train config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    if (dataset.window_count(Split::train) == 0 || dataset.window_count(Split::val) == 0) {
        throw ConfigError("train: empty train or val split");
    }
    if (dataset.channels() != model.config.channels ||
        dataset.lookback() != model.config.lookback ||
        dataset.horizon() != model.config.horizon) {
        throw ConfigError("train: dataset geometry does not match the model config");
    }

    std::vector<Tensor> params = model.parameters();
    AdamState adam(params);
    std::mt19937_64 rng(config.seed);

    // Batches always run as two fixed shards; the shadow model gives the
    // second shard its own gradient buffers. Thread count changes only who
    // executes each shard, never the arithmetic.
    DpwModel shadow = clone_model(model);
    std::vector<Tensor> shadow_params = shadow.parameters();

    const int n_windows = dataset.window_count(Split::train);
    std::vector<int> order(static_cast<std::size_t>(n_windows));
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_params = snapshot(params);
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cosine_lr(epoch, config.max_epochs, config.learning_rate,
                                    config.eta_min);

        // Fisher-Yates with our own RNG keeps the order reproducible across
        // standard libraries.
        for (int i = n_windows - 1; i > 0; --i) {
            const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        std::int64_t seen = 0;
        int batch_index = 0;
        for (int begin = 0; begin < n_windows; begin += config.batch_size, ++batch_index) {
            const int end = std::min(begin + config.batch_size, n_windows);
            const int b = end - begin;
            const int mid = begin + (b + 1) / 2;

            for (std::size_t k = 0; k < params.size(); ++k) {
                shadow_params[k].data() = params[k].data();
                shadow_params[k].zero_grad();
                params[k].zero_grad();
            }

            double loss0 = 0.0, loss1 = 0.0;
            if (config.worker_threads > 1 && mid < end) {
                std::thread worker(
                    [&]() { loss1 = run_shard(shadow, dataset, order, mid, end); });
                loss0 = run_shard(model, dataset, order, begin, mid);
                worker.join();
            } else {
                loss0 = run_shard(model, dataset, order, begin, mid);
                if (mid < end) loss1 = run_shard(shadow, dataset, order, mid, end);
            }

            const double loss_value = (loss0 + loss1) / b;
            if (!std::isfinite(loss_value)) {
                throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batch_index));
            }

            // shard 0 then shard 1, scaled to the batch mean
            const double inv_b = 1.0 / b;
            for (std::size_t k = 0; k < params.size(); ++k) {
                auto& g = params[k].grad();
                const auto* gs = shadow_params[k].grad_if();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] = (g[i] + (gs ? (*gs)[i] : 0.0)) * inv_b;
                }
            }
            adam.step(params, lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
            epoch_loss += loss_value * b;
            seen += b;
        }

        const double val_mse = evaluate_mse(model, dataset, Split::val, config.worker_threads);
        const auto t1 = std::chrono::steady_clock::now();

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = epoch_loss / static_cast<double>(seen);
        stats.val_mse = val_mse;
        stats.lr = lr;
        stats.seconds = std::chrono::duration<double>(t1 - t0).count();
        report.epochs.push_back(stats);

        if (epoch_hook) epoch_hook(epoch, model);

        if (val_mse < best_val) {
            best_val = val_mse;
            best_params = snapshot(params);
            report.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= config.patience) {
                report.early_stopped = true;
                break;
            }
        }
    }

    restore(params, best_params);
    report.best_val_mse = best_val;
    report.final_train_mse = evaluate_mse(model, dataset, Split::train, config.worker_threads);
    auto [test_mse, test_mae] =
        evaluate_mse_mae(model, dataset, Split::test, config.worker_threads);
    report.test_mse = test_mse;
    report.test_mae = test_mae;
    return report;
}

GradCheckReport grad_check(DpwModel& model, const std::vector<std::pair<Tensor, Tensor>>& batch,
                           double step) {
    if (batch.empty()) throw ContractError("grad_check: empty batch");
    std::vector<Tensor> params = model.parameters();

    auto batch_loss = [&](Tape& tape) {
        Tensor total;
        for (const auto& [x, y] : batch) {
            Tensor loss_i = mse_loss(tape, forward(tape, x, model), y);
            total = total.defined() ? ops::add(tape, total, loss_i) : loss_i;
        }
        return ops::mul_scalar(tape, total, 1.0 / static_cast<double>(batch.size()));
    };

    for (auto& p : params) p.zero_grad();
    Tape tape;
    tape.backward(batch_loss(tape));

    const auto names = model.named_tensors();
    auto name_of = [&](const Tensor& p) {
        for (const auto& [n, t] : names)
            if (t.same_storage(p)) return n;
        return std::string("?");
    };

    GradCheckReport report;
    Tape no_grad(false);
    for (auto& p : params) {
        const auto& analytic = *p.grad_if();
        auto& values = p.data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = batch_loss(no_grad).value();
            values[i] = saved - step;
            const double down = batch_loss(no_grad).value();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic[i] - numeric) / denom;
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name_of(p);
                report.worst_index = static_cast<int>(i);
            }
        }
    }
    return report;
}

} // namespace dpw
