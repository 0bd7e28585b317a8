#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpw/data.hpp"
#include "dpw/model.hpp"
#include "dpw/tensor.hpp"

namespace dpw {

struct TrainConfig {
    double learning_rate = 1e-3; // grid {1e-4, 5e-4, 1e-3}
    int batch_size = 32;         // grid {16, 32, 64}
    int max_epochs = 10;
    int patience = 5;
    std::uint64_t seed = 1;
    double eta_min = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Threads executing the two fixed batch shards; results are bitwise
    /// identical for any value.
    int worker_threads = 2;

    std::vector<std::string> validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_mse = 0.0;
    /// Metrics with the restored best parameters, on the standardized scale.
    double final_train_mse = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    bool early_stopped = false;
};

/// Mean of squared residuals over all T*C elements (differentiable).
Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target);
double mse_metric(const Tensor& pred, const Tensor& target);
double mae_metric(const Tensor& pred, const Tensor& target);

/// Bias-corrected Adam over a fixed parameter list.
class AdamState {
public:
    explicit AdamState(const std::vector<Tensor>& params);

    /// Applies one update from the gradients currently held by the parameters.
    void step(std::vector<Tensor>& params, double lr, double beta1, double beta2, double eps);

    std::int64_t steps_taken() const { return t_; }

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
};

double cosine_lr(int epoch, int max_epochs, double lr0, double eta_min);

/// Forward-only MSE over every window of a split. The window set is summed in
/// a fixed two-way interleave, so the result does not depend on `threads`.
double evaluate_mse(const DpwModel& model, const WindowDataset& dataset, Split split,
                    int threads = 2);
std::pair<double, double> evaluate_mse_mae(const DpwModel& model, const WindowDataset& dataset,
                                           Split split, int threads = 2);

/// Mini-batch training with per-epoch cosine decay, early stopping on
/// validation MSE, and best-epoch parameter restoration.
/// epoch_hook, when set, observes the model right after each epoch's update.
TrainReport train(DpwModel& model, const WindowDataset& dataset, const TrainConfig& config,
                  const std::function<void(int, const DpwModel&)>& epoch_hook = nullptr);

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    std::int64_t checked = 0;
};

/// Central finite differences over every trainable parameter element against
/// the tape gradients, on a batch of windows.
GradCheckReport grad_check(DpwModel& model, const std::vector<std::pair<Tensor, Tensor>>& batch,
                           double step = 1e-5);

} // namespace dpw
