#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "dpw/ops.hpp"
#include "dpw/tensor.hpp"

namespace dpw::testutil {

inline Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0, bool requires_grad = false) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

/// Relative error with the floor shared by all gradient oracles here.
inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

/// Central-difference check of d(loss)/d(leaf) for every element of every
/// leaf. make_loss must rebuild the graph from the captured leaves each call.
inline double max_grad_rel_err(std::vector<Tensor> leaves,
                               const std::function<Tensor(Tape&)>& make_loss,
                               double step = 1e-5) {
    for (auto& p : leaves) p.zero_grad();
    {
        Tape tape;
        Tensor loss = make_loss(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (auto& p : leaves) analytic.push_back(*p.grad_if());

    Tape off(false);
    double worst = 0.0;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        auto& values = leaves[k].data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = make_loss(off).value();
            values[i] = saved - step;
            const double down = make_loss(off).value();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            worst = std::max(worst, rel_err(analytic[k][i], numeric));
        }
    }
    return worst;
}

/// Loss = sum(out * R) with a fixed random projection R, so every output
/// element contributes with a distinct weight.
inline std::function<Tensor(Tape&)> projected_loss(
    const std::function<Tensor(Tape&)>& make_out, const Tensor& projection) {
    return [make_out, projection](Tape& tape) {
        return ops::sum(tape, ops::mul(tape, make_out(tape), projection));
    };
}

} // namespace dpw::testutil
