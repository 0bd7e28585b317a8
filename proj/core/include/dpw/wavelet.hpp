#pragma once

#include <utility>
#include <vector>

#include "dpw/tensor.hpp"

namespace dpw::wavelet {

/// Fixed Haar analysis filters. Orthonormal: <k_low, k_high> = 0, unit norm.
struct HaarFilters {
    static constexpr double k_low[2] = {0.7071067811865475244, 0.7071067811865475244};
    static constexpr double k_high[2] = {0.7071067811865475244, -0.7071067811865475244};
};

struct PyramidLevel {
    Tensor approx; // ceil(len/2) x C
    Tensor detail; // same shape as approx
};

/// Recursive Haar decomposition. scales_input holds the series fed to the
/// forecasting blocks: the input itself followed by each level's approximation.
/// Details are retained for diagnostics and reconstruction checks only.
struct WaveletPyramid {
    std::vector<Tensor> scales_input;  // n_scales + 1 entries
    std::vector<PyramidLevel> levels;  // n_scales entries
};

/// Replicates the last row once when the length is odd (symmetric tail padding
/// for a length-2 filter); returns the input unchanged otherwise.
Tensor pad_tail_even(const Tensor& x);

/// One analysis step on a [len x C] series (channels independent).
/// Odd lengths are tail-padded first.
std::pair<Tensor, Tensor> dwt_step(const Tensor& x);

/// Exact inverse of dwt_step (reproduces the padded parent).
Tensor idwt_step(const Tensor& approx, const Tensor& detail);

WaveletPyramid build_pyramid(const Tensor& x, int n_scales);

/// Ablation path: window-2 stride-2 mean with the same tail padding rule.
std::vector<Tensor> avg_pool_pyramid(const Tensor& x, int n_scales);

/// Sum of squares over all elements.
double energy(const Tensor& x);

} // namespace dpw::wavelet
