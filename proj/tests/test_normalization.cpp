#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dpw/normalization.hpp"
#include "test_util.hpp"

using namespace dpw;
using testutil::random_tensor;

TEST_CASE("revin on a constant channel") {
    auto [norm, stats] = revin_normalize(Tensor::from_values({3}, {2, 2, 2}));
    for (double v : norm.data()) CHECK(v == 0.0);
    CHECK(stats.mu[0] == 2.0);
    CHECK(stats.sigma[0] == kRevinEps);
}

TEST_CASE("revin two-point case uses population std") {
    auto [norm, stats] = revin_normalize(Tensor::from_values({2}, {1, 3}));
    CHECK(stats.mu[0] == 2.0);
    CHECK(stats.sigma[0] == 1.0);
    CHECK(norm.at(0) == -1.0);
    CHECK(norm.at(1) == 1.0);
}

TEST_CASE("revin round trip is the identity") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        Tensor x = random_tensor({24, 4}, rng, -10, 10);
        auto [norm, stats] = revin_normalize(x);
        Tensor back = revin_denormalize(norm, stats);
        for (std::size_t i = 0; i < x.data().size(); ++i)
            CHECK(std::abs(back.data()[i] - x.data()[i]) <= 1e-12);
    }
}

TEST_CASE("denormalize broadcasts mu and honors identity stats") {
    InstanceStats stats{{5.0, -1.0}, {2.0, 3.0}};
    Tensor zeros = Tensor::zeros({4, 2});
    Tensor out = revin_denormalize(zeros, stats);
    for (int i = 0; i < 4; ++i) {
        CHECK(out.at(i, 0) == 5.0);
        CHECK(out.at(i, 1) == -1.0);
    }

    InstanceStats unit{{0.0}, {1.0}};
    Tensor y = Tensor::from_values({3}, {1.5, -2.5, 0.25});
    Tensor same = revin_denormalize(y, unit);
    CHECK(same.data() == y.data());

    CHECK_THROWS_AS(revin_denormalize(Tensor::zeros({3, 3}), unit), ContractError);
}

TEST_CASE("normalized window statistics") {
    std::mt19937_64 rng(33);
    Tensor x = random_tensor({96, 3}, rng, -4, 4);
    auto [norm, stats] = revin_normalize(x);
    for (int j = 0; j < 3; ++j) {
        double m = 0.0;
        for (int i = 0; i < 96; ++i) m += norm.at(i, j);
        m /= 96;
        CHECK(std::abs(m) <= 1e-10);
        double var = 0.0;
        for (int i = 0; i < 96; ++i) var += (norm.at(i, j) - m) * (norm.at(i, j) - m);
        var /= 96;
        CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-8);
    }
}

TEST_CASE("scaler fit and apply") {
    Tensor train = Tensor::from_values({2}, {0, 2});
    DatasetScaler s = fit_scaler(train);
    CHECK(s.mean[0] == 1.0);
    CHECK(s.stddev[0] == 1.0);
    Tensor applied = apply_scaler(Tensor::from_values({1}, {3}), s);
    CHECK(applied.at(0) == 2.0);

    Tensor constant = Tensor::full({5}, 7.0);
    DatasetScaler cs = fit_scaler(constant);
    Tensor scaled_const = apply_scaler(constant, cs);
    for (double v : scaled_const.data()) CHECK(v == 0.0);
}

TEST_CASE("apply after fit standardizes the training split") {
    std::mt19937_64 rng(35);
    Tensor train = random_tensor({400, 3}, rng, -7, 9);
    DatasetScaler s = fit_scaler(train);
    Tensor z = apply_scaler(train, s);
    for (int j = 0; j < 3; ++j) {
        double m = 0.0;
        for (int i = 0; i < 400; ++i) m += z.at(i, j);
        m /= 400;
        CHECK(std::abs(m) <= 1e-10);
        double var = 0.0;
        for (int i = 0; i < 400; ++i) var += (z.at(i, j) - m) * (z.at(i, j) - m);
        var /= 400;
        CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-10);
    }
    Tensor back = invert_scaler(z, s);
    for (std::size_t i = 0; i < train.data().size(); ++i)
        CHECK(std::abs(back.data()[i] - train.data()[i]) <= 1e-10);
}
