#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpw/normalization.hpp"
#include "dpw/tensor.hpp"

namespace dpw {

/// Architecture hyperparameters plus the component-removal switches.
struct ModelConfig {
    int lookback = 96;
    int horizon = 96;
    int channels = 1;
    int n_scales = 3;
    int patch_len = 16;
    int hidden_dim = 128;
    int mixer_layers = 2;

    bool use_wavelet = true;        // false: average-pooling pyramid
    bool use_global_path = true;
    bool use_local_path = true;
    bool use_adaptive_fusion = true; // false: uniform 1/(N+1) weights

    double revin_eps = kRevinEps;
    double ln_eps = 1e-5;
    double gate_init_global = 0.5;
    double gate_init_local = 0.5;

    /// Every violated constraint, empty when valid.
    std::vector<std::string> validate() const;

    /// Series length at each scale: lookback halved (ceil) per level.
    std::vector<int> scale_lengths() const;
};

/// One token/feature mixing block (pre-LN residual MLPs, expansion factor 2).
struct MixerLayerParams {
    Tensor ln1_gain, ln1_bias;   // [D]
    Tensor token_w1, token_b1;   // [2Np x Np], [2Np]
    Tensor token_w2, token_b2;   // [Np x 2Np], [Np]
    Tensor ln2_gain, ln2_bias;   // [D]
    Tensor chan_w1, chan_b1;     // [D x 2D], [2D]
    Tensor chan_w2, chan_b2;     // [2D x D], [D]
};

/// All learnable state of one scale's dual-path block.
struct ScaleBlockParams {
    int scale_len = 0;      // L^(j)
    int patch_len_eff = 0;  // min(P, L^(j))
    int n_patches = 0;      // ceil(L^(j) / patch_len_eff)

    Tensor w_lin, b_lin;     // [T x L^(j)], [T]; shared across channels
    Tensor embed_w, embed_b; // [P_eff x D], [D]
    std::vector<MixerLayerParams> layers;
    Tensor head_w, head_b;   // [(Np*D) x T], [T]
    Tensor gate_global, gate_local; // scalars
};

struct DpwModel {
    ModelConfig config;
    std::vector<ScaleBlockParams> blocks; // n_scales + 1
    Tensor fusion_logits;                 // [(N+1) x C]

    /// Trainable tensors in a fixed order; paths disabled by ablation flags
    /// are excluded (their tensors still exist but never receive updates).
    std::vector<Tensor> parameters() const;

    /// All tensors with stable names, for checkpoints.
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;
};

/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, unit layer-norm gains,
/// gates at their configured init, zero fusion logits.
DpwModel init_params(const ModelConfig& config, std::uint64_t seed);

/// Structure (shapes, zero values) without touching an RNG.
DpwModel make_model_skeleton(const ModelConfig& config);

// Forward graph pieces. x_scale is [L^(j) x C]; forecasts are [T x C].
Tensor global_path(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block);
Tensor patchify(Tape& tape, const Tensor& x_scale, int patch_len_eff);
Tensor mixer_layer(Tape& tape, const Tensor& z, const MixerLayerParams& params, int n_patches,
                   int channels, double ln_eps);
Tensor local_path(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block,
                  const ModelConfig& config);
Tensor scale_forecast(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block,
                      const ModelConfig& config);
Tensor fuse(Tape& tape, const std::vector<Tensor>& scale_forecasts, const Tensor& fusion_logits,
            bool adaptive);

/// Full pipeline: instance-normalize, decompose, per-scale forecast, fuse,
/// denormalize. Returns the forecast in the units of x_raw.
Tensor forward(Tape& tape, const Tensor& x_raw, const DpwModel& model);

} // namespace dpw
