#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dpw/model.hpp"
#include "dpw/ops.hpp"
#include "test_util.hpp"

using namespace dpw;
using testutil::max_grad_rel_err;
using testutil::projected_loss;
using testutil::random_tensor;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.lookback = 16;
    cfg.horizon = 4;
    cfg.channels = 2;
    cfg.n_scales = 1;
    cfg.patch_len = 4;
    cfg.hidden_dim = 8;
    cfg.mixer_layers = 1;
    return cfg;
}

} // namespace

TEST_CASE("config validation lists every violation") {
    ModelConfig cfg;
    cfg.lookback = 0;
    cfg.hidden_dim = -1;
    cfg.use_global_path = false;
    cfg.use_local_path = false;
    auto errors = cfg.validate();
    CHECK(errors.size() == 3);
    CHECK_THROWS_AS(make_model_skeleton(cfg), ConfigError);
}

TEST_CASE("scale lengths halve with ceiling") {
    ModelConfig cfg = tiny_config();
    cfg.lookback = 96;
    cfg.n_scales = 3;
    CHECK(cfg.scale_lengths() == std::vector<int>{96, 48, 24, 12});
    cfg.lookback = 7;
    CHECK(cfg.scale_lengths() == std::vector<int>{7, 4, 2, 1});
}

TEST_CASE("global path identity and constant bias") {
    ModelConfig cfg = tiny_config();
    cfg.horizon = cfg.lookback = 6;
    cfg.n_scales = 0;
    DpwModel m = make_model_skeleton(cfg);
    auto& block = m.blocks[0];
    for (int i = 0; i < 6; ++i) block.w_lin.data()[static_cast<std::size_t>(i) * 6 + i] = 1.0;

    std::mt19937_64 rng(41);
    Tensor x = random_tensor({6, 2}, rng);
    Tape t(false);
    Tensor h = global_path(t, x, block);
    for (std::size_t i = 0; i < x.data().size(); ++i) CHECK(h.data()[i] == x.data()[i]);

    for (auto& v : block.w_lin.data()) v = 0.0;
    for (auto& v : block.b_lin.data()) v = 1.0;
    Tensor ones = global_path(t, x, block);
    for (double v : ones.data()) CHECK(v == 1.0);

    CHECK_THROWS_AS(global_path(t, Tensor::zeros({5, 2}), block), DimensionError);
}

TEST_CASE("global path gradient vs finite differences") {
    ModelConfig cfg = tiny_config();
    DpwModel m = init_params(cfg, 7);
    std::mt19937_64 rng(43);
    Tensor x = random_tensor({16, 2}, rng);
    Tensor target = random_tensor({4, 2}, rng);
    auto loss = [&](Tape& tape) {
        Tensor diff = ops::sub(tape, global_path(tape, x, m.blocks[0]), target);
        return ops::mean(tape, ops::mul(tape, diff, diff));
    };
    CHECK(max_grad_rel_err({m.blocks[0].w_lin, m.blocks[0].b_lin}, loss) <= 1e-5);
}

TEST_CASE("patchify layouts") {
    Tape t(false);
    std::mt19937_64 rng(47);

    Tensor x8 = random_tensor({8, 2}, rng);
    Tensor tok8 = patchify(t, x8, 4);
    REQUIRE(tok8.shape() == std::vector<int>{4, 4});
    // row c*Np+k holds patch k of channel c
    CHECK(tok8.at(0, 0) == x8.at(0, 0));
    CHECK(tok8.at(0, 3) == x8.at(3, 0));
    CHECK(tok8.at(1, 0) == x8.at(4, 0));
    CHECK(tok8.at(2, 0) == x8.at(0, 1));
    CHECK(tok8.at(3, 3) == x8.at(7, 1));

    Tensor x12 = random_tensor({12, 1}, rng);
    Tensor tok12 = patchify(t, x12, 12); // patch_len_eff = min(16,12) resolved by caller
    CHECK(tok12.shape() == std::vector<int>{1, 12});

    Tensor x10 = random_tensor({10, 1}, rng);
    Tensor tok10 = patchify(t, x10, 4);
    REQUIRE(tok10.shape() == std::vector<int>{3, 4});
    CHECK(tok10.at(2, 2) == x10.at(9, 0));
    CHECK(tok10.at(2, 3) == x10.at(9, 0)); // replicated tail
}

TEST_CASE("mixer layer is the identity with zero weights") {
    ModelConfig cfg = tiny_config();
    DpwModel m = make_model_skeleton(cfg);
    std::mt19937_64 rng(51);
    const auto& block = m.blocks[0];
    Tensor z = random_tensor({block.n_patches * cfg.channels, cfg.hidden_dim}, rng);
    Tape t(false);
    Tensor out = mixer_layer(t, z, block.layers[0], block.n_patches, cfg.channels, cfg.ln_eps);
    REQUIRE(out.shape() == z.shape());
    for (std::size_t i = 0; i < z.data().size(); ++i) CHECK(out.data()[i] == z.data()[i]);
}

TEST_CASE("mixer layer keeps shape on a random config") {
    ModelConfig cfg = tiny_config();
    cfg.hidden_dim = 10;
    DpwModel m = init_params(cfg, 3);
    std::mt19937_64 rng(53);
    const auto& block = m.blocks[1]; // coarse scale, Np = 2
    Tensor z = random_tensor({block.n_patches * cfg.channels, cfg.hidden_dim}, rng);
    Tape t(false);
    Tensor out = mixer_layer(t, z, block.layers[0], block.n_patches, cfg.channels, cfg.ln_eps);
    CHECK(out.shape() == z.shape());
}

TEST_CASE("mixer layer gradient vs finite differences") {
    ModelConfig cfg = tiny_config();
    DpwModel m = init_params(cfg, 11);
    std::mt19937_64 rng(55);
    const auto& block = m.blocks[0];
    const auto& layer = block.layers[0];
    Tensor z = random_tensor({block.n_patches * cfg.channels, cfg.hidden_dim}, rng, -1, 1, true);
    Tensor proj = random_tensor({block.n_patches * cfg.channels, cfg.hidden_dim}, rng);
    auto out = [&](Tape& tape) {
        return mixer_layer(tape, z, layer, block.n_patches, cfg.channels, cfg.ln_eps);
    };
    std::vector<Tensor> leaves{z,          layer.ln1_gain, layer.ln1_bias, layer.token_w1,
                               layer.token_b1, layer.token_w2, layer.token_b2, layer.ln2_gain,
                               layer.ln2_bias, layer.chan_w1,  layer.chan_b1,  layer.chan_w2,
                               layer.chan_b2};
    CHECK(max_grad_rel_err(leaves, projected_loss(out, proj)) <= 1e-4);
}

TEST_CASE("local path zero input with zero gains gives zero output") {
    ModelConfig cfg = tiny_config();
    DpwModel m = make_model_skeleton(cfg);
    for (auto& layer : m.blocks[0].layers) {
        for (auto& v : layer.ln1_gain.data()) v = 0.0;
        for (auto& v : layer.ln2_gain.data()) v = 0.0;
    }
    Tape t(false);
    Tensor out = local_path(t, Tensor::zeros({16, 2}), m.blocks[0], cfg);
    for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("local path output shape across scales of the paper config") {
    ModelConfig cfg;
    cfg.lookback = 96;
    cfg.horizon = 96;
    cfg.channels = 7;
    cfg.n_scales = 3;
    cfg.patch_len = 16;
    cfg.hidden_dim = 16; // small hidden keeps the test quick
    DpwModel m = init_params(cfg, 5);
    auto lengths = cfg.scale_lengths();
    std::mt19937_64 rng(57);
    Tape t(false);
    for (std::size_t j = 0; j < m.blocks.size(); ++j) {
        Tensor x = random_tensor({lengths[j], 7}, rng);
        Tensor out = local_path(t, x, m.blocks[j], cfg);
        CHECK(out.shape() == std::vector<int>{96, 7});
        Tensor g = global_path(t, x, m.blocks[j]);
        CHECK(g.shape() == std::vector<int>{96, 7});
        Tensor f = scale_forecast(t, x, m.blocks[j], cfg);
        CHECK(f.shape() == std::vector<int>{96, 7});
    }
}

TEST_CASE("scale forecast gating") {
    ModelConfig cfg = tiny_config();
    DpwModel m = init_params(cfg, 19);
    std::mt19937_64 rng(59);
    Tensor x = random_tensor({16, 2}, rng);
    Tape t(false);

    m.blocks[0].gate_global.data()[0] = 1.0;
    m.blocks[0].gate_local.data()[0] = 0.0;
    Tensor only_global = scale_forecast(t, x, m.blocks[0], cfg);
    Tensor href = global_path(t, x, m.blocks[0]);
    for (std::size_t i = 0; i < href.data().size(); ++i)
        CHECK(only_global.data()[i] == href.data()[i]);

    // Equal paths: zero weights, shared constant bias in both heads.
    DpwModel z = make_model_skeleton(cfg);
    for (auto& v : z.blocks[0].b_lin.data()) v = 0.75;
    for (auto& v : z.blocks[0].head_b.data()) v = 0.75;
    z.blocks[0].gate_global.data()[0] = 0.5;
    z.blocks[0].gate_local.data()[0] = 0.5;
    Tensor both = scale_forecast(t, x, z.blocks[0], cfg);
    for (double v : both.data()) CHECK(v == doctest::Approx(0.75).epsilon(1e-15));

    ModelConfig bad = cfg;
    bad.use_global_path = bad.use_local_path = false;
    CHECK_THROWS_AS(scale_forecast(t, x, m.blocks[0], bad), ConfigError);
}

TEST_CASE("gate gradient equals the path inner product") {
    ModelConfig cfg = tiny_config();
    DpwModel m = init_params(cfg, 23);
    std::mt19937_64 rng(61);
    Tensor x = random_tensor({16, 2}, rng);
    Tensor target = random_tensor({4, 2}, rng);
    auto loss = [&](Tape& tape) {
        Tensor diff = ops::sub(tape, scale_forecast(tape, x, m.blocks[0], cfg), target);
        return ops::mean(tape, ops::mul(tape, diff, diff));
    };
    CHECK(max_grad_rel_err({m.blocks[0].gate_global, m.blocks[0].gate_local}, loss) <= 1e-6);
}

TEST_CASE("fusion weights") {
    Tape t(false);
    std::mt19937_64 rng(67);

    // A = 0 -> uniform 0.25; indicator forecasts recover the weights.
    std::vector<Tensor> forecasts;
    for (int j = 0; j < 4; ++j) forecasts.push_back(Tensor::full({3, 2}, j == 0 ? 1.0 : 0.0));
    Tensor fused = fuse(t, forecasts, Tensor::zeros({4, 2}), true);
    for (double v : fused.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

    // Identical forecasts are a fixed point for any logits.
    Tensor common = random_tensor({5, 3}, rng);
    std::vector<Tensor> same{common, common, common, common};
    Tensor logits = random_tensor({4, 3}, rng, -3, 3);
    Tensor out = fuse(t, same, logits, true);
    for (std::size_t i = 0; i < common.data().size(); ++i)
        CHECK(std::abs(out.data()[i] - common.data()[i]) <= 1e-12);

    // Saturated logits concentrate the weight on scale 0.
    Tensor sat = Tensor::zeros({4, 2});
    for (int j = 0; j < 4; ++j) sat.data()[static_cast<std::size_t>(j) * 2] = j == 0 ? 10 : -10;
    Tensor w = ops::softmax(t, sat, 0);
    CHECK(w.at(0, 0) >= 0.999);

    // Disabled fusion averages uniformly regardless of logits.
    Tensor uniform = fuse(t, forecasts, sat, false);
    for (double v : uniform.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(fuse(t, forecasts, Tensor::zeros({3, 2}), true), DimensionError);
}

TEST_CASE("forward anchors constants exactly") {
    ModelConfig cfg = tiny_config();
    cfg.n_scales = 3;
    DpwModel m = make_model_skeleton(cfg);
    Tape t(false);
    for (double v : {5.0, -3.25, 1e6}) {
        Tensor x = Tensor::full({16, 2}, v);
        Tensor y = forward(t, x, m);
        REQUIRE(y.shape() == std::vector<int>{4, 2});
        for (double out : y.data()) CHECK(std::abs(out - v) <= 1e-12);
    }
}

TEST_CASE("forward shape on the paper config") {
    ModelConfig cfg;
    cfg.lookback = 96;
    cfg.horizon = 96;
    cfg.channels = 7;
    cfg.n_scales = 3;
    cfg.patch_len = 16;
    cfg.hidden_dim = 16;
    DpwModel m = init_params(cfg, 29);
    std::mt19937_64 rng(71);
    Tensor x = random_tensor({96, 7}, rng);
    Tape t(false);
    CHECK(forward(t, x, m).shape() == std::vector<int>{96, 7});
    CHECK_THROWS_AS(forward(t, Tensor::zeros({95, 7}), m), DimensionError);
}

TEST_CASE("init_params determinism, bounds, and uniform initial fusion") {
    ModelConfig cfg = tiny_config();
    DpwModel a = init_params(cfg, 12345);
    DpwModel b = init_params(cfg, 12345);
    auto na = a.named_tensors();
    auto nb = b.named_tensors();
    REQUIRE(na.size() == nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
        CHECK(na[i].first == nb[i].first);
        CHECK(na[i].second.data() == nb[i].second.data());
    }

    DpwModel c = init_params(cfg, 54321);
    bool any_diff = false;
    for (std::size_t i = 0; i < na.size(); ++i)
        if (na[i].second.data() != c.named_tensors()[i].second.data()) any_diff = true;
    CHECK(any_diff);

    const double wl_bound = 1.0 / std::sqrt(16.0);
    for (double v : a.blocks[0].w_lin.data()) CHECK(std::abs(v) <= wl_bound);
    const double emb_bound = 1.0 / std::sqrt(4.0);
    for (double v : a.blocks[0].embed_w.data()) CHECK(std::abs(v) <= emb_bound);

    for (double v : a.fusion_logits.data()) CHECK(v == 0.0);
    Tape t(false);
    Tensor w = ops::softmax(t, a.fusion_logits, 0);
    for (double v : w.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-14)); // N=1 -> 2 scales

    CHECK(a.blocks[0].gate_global.value() == 0.5);
    CHECK(a.blocks[0].gate_local.value() == 0.5);
}

TEST_CASE("disabled paths are bitwise inert") {
    ModelConfig cfg = tiny_config();
    cfg.use_local_path = false;
    DpwModel m = init_params(cfg, 77);
    std::mt19937_64 rng(79);
    Tensor x = random_tensor({16, 2}, rng);
    Tape t(false);
    Tensor before = forward(t, x, m);

    // Scribble over every local-path tensor; the forecast must not move.
    for (auto& block : m.blocks) {
        for (auto& v : block.embed_w.data()) v = 99.0;
        for (auto& v : block.head_w.data()) v = -42.0;
        block.gate_local.data()[0] = 1e9;
        for (auto& layer : block.layers) {
            for (auto& v : layer.token_w1.data()) v = 7.0;
            for (auto& v : layer.chan_w1.data()) v = -7.0;
        }
    }
    Tensor after = forward(t, x, m);
    CHECK(before.data() == after.data());

    for (const auto& p : m.parameters()) {
        CHECK(!p.same_storage(m.blocks[0].embed_w));
        CHECK(!p.same_storage(m.blocks[0].gate_local));
    }

    ModelConfig cfg2 = tiny_config();
    cfg2.use_global_path = false;
    DpwModel m2 = init_params(cfg2, 81);
    Tensor b2 = forward(t, x, m2);
    for (auto& block : m2.blocks) {
        for (auto& v : block.w_lin.data()) v = 123.0;
        block.gate_global.data()[0] = -5.0;
    }
    Tensor a2 = forward(t, x, m2);
    CHECK(b2.data() == a2.data());
}

TEST_CASE("pooling ablation swaps the pyramid") {
    ModelConfig cfg = tiny_config();
    DpwModel m = init_params(cfg, 91);
    std::mt19937_64 rng(93);
    Tensor x = random_tensor({16, 2}, rng);
    Tape t(false);
    Tensor with_wavelet = forward(t, x, m);
    m.config.use_wavelet = false;
    Tensor with_pooling = forward(t, x, m);
    bool differs = false;
    for (std::size_t i = 0; i < with_wavelet.data().size(); ++i)
        if (with_wavelet.data()[i] != with_pooling.data()[i]) differs = true;
    CHECK(differs);
}
