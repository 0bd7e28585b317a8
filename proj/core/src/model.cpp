#include "dpw/model.hpp"

#include <cmath>
#include <random>

#include "dpw/ops.hpp"
#include "dpw/wavelet.hpp"

namespace dpw {

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> errors;
    if (lookback < 1) errors.push_back("lookback must be >= 1");
    if (horizon < 1) errors.push_back("horizon must be >= 1");
    if (channels < 1) errors.push_back("channels must be >= 1");
    if (n_scales < 0) errors.push_back("n_scales must be >= 0");
    if (patch_len < 1) errors.push_back("patch_len must be >= 1");
    if (hidden_dim < 1) errors.push_back("hidden_dim must be >= 1");
    if (mixer_layers < 1) errors.push_back("mixer_layers must be >= 1");
    if (!use_global_path && !use_local_path)
        errors.push_back("at least one of the global/local paths must be enabled");
    if (revin_eps <= 0.0) errors.push_back("revin_eps must be positive");
    if (ln_eps <= 0.0) errors.push_back("ln_eps must be positive");
    return errors;
}

std::vector<int> ModelConfig::scale_lengths() const {
    std::vector<int> lengths{lookback};
    for (int j = 0; j < n_scales; ++j) lengths.push_back((lengths.back() + 1) / 2);
    return lengths;
}

namespace {

struct Init {
    std::mt19937_64 rng;

    explicit Init(std::uint64_t seed) : rng(seed) {}

    Tensor uniform(std::vector<int> shape, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor t = Tensor::zeros(std::move(shape), true);
        for (double& v : t.data()) v = dist(rng);
        return t;
    }

    static Tensor constant(std::vector<int> shape, double v) {
        return Tensor::full(std::move(shape), v, true);
    }
};

ScaleBlockParams make_block(const ModelConfig& cfg, int scale_len, Init* init) {
    ScaleBlockParams b;
    b.scale_len = scale_len;
    b.patch_len_eff = std::min(cfg.patch_len, scale_len);
    b.n_patches = (scale_len + b.patch_len_eff - 1) / b.patch_len_eff;
    const int np = b.n_patches;
    const int d = cfg.hidden_dim;
    const int t = cfg.horizon;

    auto weight = [&](std::vector<int> shape, int fan_in) {
        return init ? init->uniform(std::move(shape), fan_in)
                    : Tensor::zeros(std::move(shape), true);
    };

    b.w_lin = weight({t, scale_len}, scale_len);
    b.b_lin = Init::constant({t}, 0.0);
    b.embed_w = weight({b.patch_len_eff, d}, b.patch_len_eff);
    b.embed_b = Init::constant({d}, 0.0);
    for (int l = 0; l < cfg.mixer_layers; ++l) {
        MixerLayerParams layer;
        layer.ln1_gain = Init::constant({d}, 1.0);
        layer.ln1_bias = Init::constant({d}, 0.0);
        layer.token_w1 = weight({2 * np, np}, np);
        layer.token_b1 = Init::constant({2 * np}, 0.0);
        layer.token_w2 = weight({np, 2 * np}, 2 * np);
        layer.token_b2 = Init::constant({np}, 0.0);
        layer.ln2_gain = Init::constant({d}, 1.0);
        layer.ln2_bias = Init::constant({d}, 0.0);
        layer.chan_w1 = weight({d, 2 * d}, d);
        layer.chan_b1 = Init::constant({2 * d}, 0.0);
        layer.chan_w2 = weight({2 * d, d}, 2 * d);
        layer.chan_b2 = Init::constant({d}, 0.0);
        b.layers.push_back(std::move(layer));
    }
    b.head_w = weight({np * d, t}, np * d);
    b.head_b = Init::constant({t}, 0.0);
    b.gate_global = Tensor::scalar(cfg.gate_init_global, true);
    b.gate_local = Tensor::scalar(cfg.gate_init_local, true);
    return b;
}

DpwModel build_model(const ModelConfig& cfg, Init* init) {
    const auto errors = cfg.validate();
    if (!errors.empty()) {
        std::string msg = "invalid model config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    DpwModel m;
    m.config = cfg;
    for (int len : cfg.scale_lengths()) m.blocks.push_back(make_block(cfg, len, init));
    m.fusion_logits = Tensor::zeros({cfg.n_scales + 1, cfg.channels}, true);
    return m;
}

} // namespace

DpwModel init_params(const ModelConfig& config, std::uint64_t seed) {
    Init init(seed);
    return build_model(config, &init);
}

DpwModel make_model_skeleton(const ModelConfig& config) { return build_model(config, nullptr); }

std::vector<Tensor> DpwModel::parameters() const {
    std::vector<Tensor> params;
    for (const auto& b : blocks) {
        if (config.use_global_path) {
            params.push_back(b.w_lin);
            params.push_back(b.b_lin);
            params.push_back(b.gate_global);
        }
        if (config.use_local_path) {
            params.push_back(b.embed_w);
            params.push_back(b.embed_b);
            for (const auto& l : b.layers) {
                params.push_back(l.ln1_gain);
                params.push_back(l.ln1_bias);
                params.push_back(l.token_w1);
                params.push_back(l.token_b1);
                params.push_back(l.token_w2);
                params.push_back(l.token_b2);
                params.push_back(l.ln2_gain);
                params.push_back(l.ln2_bias);
                params.push_back(l.chan_w1);
                params.push_back(l.chan_b1);
                params.push_back(l.chan_w2);
                params.push_back(l.chan_b2);
            }
            params.push_back(b.head_w);
            params.push_back(b.head_b);
            params.push_back(b.gate_local);
        }
    }
    if (config.use_adaptive_fusion) params.push_back(fusion_logits);
    return params;
}

std::vector<std::pair<std::string, Tensor>> DpwModel::named_tensors() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        const auto& b = blocks[j];
        const std::string p = "blocks." + std::to_string(j) + ".";
        out.emplace_back(p + "w_lin", b.w_lin);
        out.emplace_back(p + "b_lin", b.b_lin);
        out.emplace_back(p + "embed_w", b.embed_w);
        out.emplace_back(p + "embed_b", b.embed_b);
        for (std::size_t l = 0; l < b.layers.size(); ++l) {
            const auto& layer = b.layers[l];
            const std::string lp = p + "layers." + std::to_string(l) + ".";
            out.emplace_back(lp + "ln1_gain", layer.ln1_gain);
            out.emplace_back(lp + "ln1_bias", layer.ln1_bias);
            out.emplace_back(lp + "token_w1", layer.token_w1);
            out.emplace_back(lp + "token_b1", layer.token_b1);
            out.emplace_back(lp + "token_w2", layer.token_w2);
            out.emplace_back(lp + "token_b2", layer.token_b2);
            out.emplace_back(lp + "ln2_gain", layer.ln2_gain);
            out.emplace_back(lp + "ln2_bias", layer.ln2_bias);
            out.emplace_back(lp + "chan_w1", layer.chan_w1);
            out.emplace_back(lp + "chan_b1", layer.chan_b1);
            out.emplace_back(lp + "chan_w2", layer.chan_w2);
            out.emplace_back(lp + "chan_b2", layer.chan_b2);
        }
        out.emplace_back(p + "head_w", b.head_w);
        out.emplace_back(p + "head_b", b.head_b);
        out.emplace_back(p + "gate_global", b.gate_global);
        out.emplace_back(p + "gate_local", b.gate_local);
    }
    out.emplace_back("fusion.logits", fusion_logits);
    return out;
}

Tensor global_path(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block) {
    if (x_scale.rows() != block.scale_len) {
        throw DimensionError("global_path: input length " + std::to_string(x_scale.rows()) +
                             " does not match block scale length " +
                             std::to_string(block.scale_len));
    }
    // W_lin [T x L] applied per channel; columns of x are channels.
    Tensor h = ops::matmul(tape, block.w_lin, x_scale);
    return ops::add_colvec(tape, h, block.b_lin);
}

Tensor patchify(Tape& tape, const Tensor& x_scale, int patch_len_eff) {
    const int len = x_scale.rows();
    const int c = x_scale.cols();
    const int p = std::min(patch_len_eff, len);
    const int np = (len + p - 1) / p;
    Tensor padded = ops::pad_replicate_tail(tape, x_scale, np * p);
    Tensor by_channel = ops::transpose(tape, padded);        // [C x L_pad]
    return ops::reshape(tape, by_channel, {c * np, p});      // row c*Np+k = patch k of channel c
}

Tensor mixer_layer(Tape& tape, const Tensor& z, const MixerLayerParams& params, int n_patches,
                   int channels, double ln_eps) {
    if (z.rows() != n_patches * channels) {
        throw DimensionError("mixer_layer: token stack of " + std::to_string(z.rows()) +
                             " rows does not factor into " + std::to_string(channels) + " x " +
                             std::to_string(n_patches));
    }
    // Token mixing runs per channel so variates never interact.
    Tensor ln1 = ops::layer_norm(tape, z, params.ln1_gain, params.ln1_bias, ln_eps);
    std::vector<Tensor> mixed;
    mixed.reserve(channels);
    for (int c = 0; c < channels; ++c) {
        Tensor zc = ops::slice_rows(tape, ln1, c * n_patches, (c + 1) * n_patches);
        Tensor h = ops::add_colvec(tape, ops::matmul(tape, params.token_w1, zc), params.token_b1);
        h = ops::gelu(tape, h);
        Tensor m = ops::add_colvec(tape, ops::matmul(tape, params.token_w2, h), params.token_b2);
        mixed.push_back(m);
    }
    Tensor u = ops::add(tape, z, ops::concat_rows(tape, mixed));

    // Feature mixing is row-local, so the whole stack goes through at once.
    Tensor ln2 = ops::layer_norm(tape, u, params.ln2_gain, params.ln2_bias, ln_eps);
    Tensor h2 = ops::add_rowvec(tape, ops::matmul(tape, ln2, params.chan_w1), params.chan_b1);
    h2 = ops::gelu(tape, h2);
    Tensor m2 = ops::add_rowvec(tape, ops::matmul(tape, h2, params.chan_w2), params.chan_b2);
    return ops::add(tape, u, m2);
}

Tensor local_path(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block,
                  const ModelConfig& config) {
    if (x_scale.rows() != block.scale_len) {
        throw DimensionError("local_path: input length " + std::to_string(x_scale.rows()) +
                             " does not match block scale length " +
                             std::to_string(block.scale_len));
    }
    const int c = x_scale.cols();
    const int np = block.n_patches;
    const int d = config.hidden_dim;
    Tensor tokens = patchify(tape, x_scale, block.patch_len_eff);       // [(C*Np) x P_eff]
    Tensor z = ops::add_rowvec(tape, ops::matmul(tape, tokens, block.embed_w), block.embed_b);
    for (const auto& layer : block.layers) {
        z = mixer_layer(tape, z, layer, np, c, config.ln_eps);
    }
    Tensor flat = ops::reshape(tape, z, {c, np * d});
    Tensor head = ops::add_rowvec(tape, ops::matmul(tape, flat, block.head_w), block.head_b);
    return ops::transpose(tape, head); // [T x C]
}

Tensor scale_forecast(Tape& tape, const Tensor& x_scale, const ScaleBlockParams& block,
                      const ModelConfig& config) {
    if (!config.use_global_path && !config.use_local_path) {
        throw ConfigError("scale_forecast: both paths disabled");
    }
    Tensor result;
    if (config.use_global_path) {
        result = ops::mul_scalar_tensor(tape, global_path(tape, x_scale, block),
                                        block.gate_global);
    }
    if (config.use_local_path) {
        Tensor local = ops::mul_scalar_tensor(tape, local_path(tape, x_scale, block, config),
                                              block.gate_local);
        result = result.defined() ? ops::add(tape, result, local) : local;
    }
    return result;
}

Tensor fuse(Tape& tape, const std::vector<Tensor>& scale_forecasts, const Tensor& fusion_logits,
            bool adaptive) {
    if (scale_forecasts.empty()) throw DimensionError("fuse: no scale forecasts");
    const int n = static_cast<int>(scale_forecasts.size());
    for (const auto& f : scale_forecasts) {
        if (f.shape() != scale_forecasts[0].shape()) {
            throw DimensionError("fuse: forecast shape " + f.shape_str() + " differs from " +
                                 scale_forecasts[0].shape_str());
        }
    }
    if (!adaptive) {
        Tensor out = ops::mul_scalar(tape, scale_forecasts[0], 1.0 / n);
        for (int j = 1; j < n; ++j) {
            out = ops::add(tape, out, ops::mul_scalar(tape, scale_forecasts[j], 1.0 / n));
        }
        return out;
    }
    if (fusion_logits.rows() != n || fusion_logits.cols() != scale_forecasts[0].cols()) {
        throw DimensionError("fuse: logits " + fusion_logits.shape_str() + " do not match " +
                             std::to_string(n) + " scales x " +
                             std::to_string(scale_forecasts[0].cols()) + " channels");
    }
    Tensor weights = ops::softmax(tape, fusion_logits, 0); // per channel over scales
    Tensor out;
    for (int j = 0; j < n; ++j) {
        Tensor wj = ops::slice_rows(tape, weights, j, j + 1);
        Tensor term = ops::mul_rowvec(tape, scale_forecasts[j], wj);
        out = out.defined() ? ops::add(tape, out, term) : term;
    }
    return out;
}

Tensor forward(Tape& tape, const Tensor& x_raw, const DpwModel& model) {
    const auto& cfg = model.config;
    if (x_raw.rank() != 2 || x_raw.rows() != cfg.lookback || x_raw.cols() != cfg.channels) {
        throw DimensionError("forward: input " + x_raw.shape_str() + " does not match config [" +
                             std::to_string(cfg.lookback) + " x " +
                             std::to_string(cfg.channels) + "]");
    }
    auto [x_norm, stats] = revin_normalize(x_raw, cfg.revin_eps);

    // The decomposition consumes only the non-learnable normalized input, so
    // it runs outside the tape.
    std::vector<Tensor> scales;
    if (cfg.use_wavelet) {
        scales = wavelet::build_pyramid(x_norm, cfg.n_scales).scales_input;
    } else {
        scales = wavelet::avg_pool_pyramid(x_norm, cfg.n_scales);
    }

    std::vector<Tensor> forecasts;
    forecasts.reserve(scales.size());
    for (std::size_t j = 0; j < scales.size(); ++j) {
        forecasts.push_back(scale_forecast(tape, scales[j], model.blocks[j], cfg));
    }
    Tensor y_norm = fuse(tape, forecasts, model.fusion_logits, cfg.use_adaptive_fusion);

    Tensor sigma = Tensor::from_values({cfg.channels}, stats.sigma);
    Tensor mu = Tensor::from_values({cfg.channels}, stats.mu);
    return ops::add_rowvec(tape, ops::mul_rowvec(tape, y_norm, sigma), mu);
}

} // namespace dpw
