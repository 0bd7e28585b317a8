#include "dpw/wavelet.hpp"

#include <iostream>

namespace dpw::wavelet {

namespace {

void require_series(const Tensor& x, const char* op) {
    if (x.rank() < 1 || x.rank() > 2) {
        throw DimensionError(std::string(op) + ": expected a [len x C] series, got " +
                             x.shape_str());
    }
    if (x.rows() < 1) throw ContractError(std::string(op) + ": empty series");
}

} // namespace

Tensor pad_tail_even(const Tensor& x) {
    require_series(x, "pad_tail_even");
    const int len = x.rows();
    if (len % 2 == 0) return x;
    const int c = x.cols();
    std::vector<int> shape = x.rank() == 1 ? std::vector<int>{len + 1}
                                           : std::vector<int>{len + 1, c};
    Tensor out = Tensor::zeros(shape);
    const auto& xv = x.data();
    auto& o = out.data();
    for (std::size_t i = 0; i < xv.size(); ++i) o[i] = xv[i];
    for (int j = 0; j < c; ++j)
        o[static_cast<std::size_t>(len) * c + j] = xv[static_cast<std::size_t>(len - 1) * c + j];
    return out;
}

std::pair<Tensor, Tensor> dwt_step(const Tensor& x) {
    require_series(x, "dwt_step");
    Tensor p = pad_tail_even(x);
    const int len = p.rows();
    const int c = p.cols();
    const int half = len / 2;
    std::vector<int> shape = p.rank() == 1 ? std::vector<int>{half}
                                           : std::vector<int>{half, c};
    Tensor approx = Tensor::zeros(shape);
    Tensor detail = Tensor::zeros(shape);
    const auto& pv = p.data();
    auto& av = approx.data();
    auto& dv = detail.data();
    // Factored filter taps: keeps pairwise-equal samples at exactly zero detail.
    const double inv_sqrt2 = HaarFilters::k_low[0];
    for (int i = 0; i < half; ++i) {
        for (int j = 0; j < c; ++j) {
            const double a = pv[static_cast<std::size_t>(2 * i) * c + j];
            const double b = pv[static_cast<std::size_t>(2 * i + 1) * c + j];
            av[static_cast<std::size_t>(i) * c + j] = (a + b) * inv_sqrt2;
            dv[static_cast<std::size_t>(i) * c + j] = (a - b) * inv_sqrt2;
        }
    }
    return {approx, detail};
}

Tensor idwt_step(const Tensor& approx, const Tensor& detail) {
    if (approx.shape() != detail.shape()) {
        throw DimensionError("idwt_step: approx " + approx.shape_str() + " and detail " +
                             detail.shape_str() + " differ");
    }
    require_series(approx, "idwt_step");
    const int half = approx.rows();
    const int c = approx.cols();
    std::vector<int> shape = approx.rank() == 1 ? std::vector<int>{2 * half}
                                                : std::vector<int>{2 * half, c};
    Tensor out = Tensor::zeros(shape);
    const auto& av = approx.data();
    const auto& dv = detail.data();
    auto& o = out.data();
    const double inv_sqrt2 = HaarFilters::k_low[0];
    for (int i = 0; i < half; ++i) {
        for (int j = 0; j < c; ++j) {
            const double a = av[static_cast<std::size_t>(i) * c + j];
            const double d = dv[static_cast<std::size_t>(i) * c + j];
            o[static_cast<std::size_t>(2 * i) * c + j] = (a + d) * inv_sqrt2;
            o[static_cast<std::size_t>(2 * i + 1) * c + j] = (a - d) * inv_sqrt2;
        }
    }
    return out;
}

WaveletPyramid build_pyramid(const Tensor& x, int n_scales) {
    require_series(x, "build_pyramid");
    if (n_scales < 0) throw ContractError("build_pyramid: n_scales must be >= 0");
    WaveletPyramid pyr;
    pyr.scales_input.push_back(x);
    bool warned = false;
    for (int j = 0; j < n_scales; ++j) {
        const Tensor& parent = pyr.scales_input.back();
        if (parent.rows() == 1 && !warned) {
            std::cerr << "dpw: warning: pyramid level " << j + 1
                      << " decomposes a length-1 series; the coarse scale is degenerate\n";
            warned = true;
        }
        auto [approx, detail] = dwt_step(parent);
        pyr.levels.push_back({approx, detail});
        pyr.scales_input.push_back(approx);
    }
    return pyr;
}

std::vector<Tensor> avg_pool_pyramid(const Tensor& x, int n_scales) {
    require_series(x, "avg_pool_pyramid");
    if (n_scales < 0) throw ContractError("avg_pool_pyramid: n_scales must be >= 0");
    std::vector<Tensor> scales{x};
    for (int j = 0; j < n_scales; ++j) {
        Tensor p = pad_tail_even(scales.back());
        const int half = p.rows() / 2;
        const int c = p.cols();
        std::vector<int> shape = p.rank() == 1 ? std::vector<int>{half}
                                               : std::vector<int>{half, c};
        Tensor pooled = Tensor::zeros(shape);
        const auto& pv = p.data();
        auto& o = pooled.data();
        for (int i = 0; i < half; ++i)
            for (int k = 0; k < c; ++k)
                o[static_cast<std::size_t>(i) * c + k] =
                    0.5 * (pv[static_cast<std::size_t>(2 * i) * c + k] +
                           pv[static_cast<std::size_t>(2 * i + 1) * c + k]);
        scales.push_back(pooled);
    }
    return scales;
}

double energy(const Tensor& x) {
    double e = 0.0;
    for (double v : x.data()) e += v * v;
    return e;
}

} // namespace dpw::wavelet
