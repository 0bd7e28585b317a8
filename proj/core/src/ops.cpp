#include "dpw/ops.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace dpw::ops {

namespace {

#ifndef NDEBUG
void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw ContractError(std::string(op) + " produced a non-finite value");
        }
    }
}
#define DPW_CHECK_FINITE(t, op) check_finite((t), (op))
#else
#define DPW_CHECK_FINITE(t, op) ((void)0)
#endif

bool track(const Tape& tape, const Tensor& a) { return tape.enabled() && a.requires_grad(); }

bool track(const Tape& tape, const Tensor& a, const Tensor& b) {
    return tape.enabled() && (a.requires_grad() || b.requires_grad());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + a.shape_str() + " and " +
                             b.shape_str() + " differ");
    }
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_accum(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double apv = arow[p];
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += apv * brow[j];
        }
    }
}

// c[m x k] += g[m x n] * b[k x n]^T. Materializing b^T turns the inner loop
// into the same contiguous-accumulate shape as gemm_accum, which vectorizes;
// the dot-product form does not without reassociation. The scratch buffer is
// per-thread, so shard workers never share it.
void gemm_nt_accum(const double* g, const double* b, double* c, int m, int n, int k) {
    thread_local std::vector<double> bt;
    if (bt.size() < static_cast<std::size_t>(n) * k) bt.resize(static_cast<std::size_t>(n) * k);
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j)
            bt[static_cast<std::size_t>(j) * k + p] = b[static_cast<std::size_t>(p) * n + j];
    for (int i = 0; i < m; ++i) {
        const double* grow = g + static_cast<std::size_t>(i) * n;
        double* crow = c + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double gv = grow[j];
            const double* btrow = bt.data() + static_cast<std::size_t>(j) * k;
            for (int p = 0; p < k; ++p) crow[p] += gv * btrow[p];
        }
    }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn_accum(const double* a, const double* g, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        const double* grow = g + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double apv = arow[p];
            double* crow = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += apv * grow[j];
        }
    }
}

constexpr double kGeluCoef = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / 3.14159265358979323846);

} // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + a.shape_str() + " and " +
                             b.shape_str());
    }
    const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out = Tensor::zeros({m, n});
    gemm_accum(a.data().data(), b.data().data(), out.data().data(), m, k, n);
    DPW_CHECK_FINITE(out, "matmul");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        tape.record(out, [ac, bc, oc, m, k, n]() mutable {
            const double* g = oc.grad().data();
            if (ac.requires_grad()) gemm_nt_accum(g, bc.data().data(), ac.grad().data(), m, n, k);
            if (bc.requires_grad()) gemm_tn_accum(ac.data().data(), g, bc.grad().data(), m, k, n);
        });
    }
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    DPW_CHECK_FINITE(out, "add");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        tape.record(out, [ac, bc, oc]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (bc.requires_grad()) {
                auto& gb = bc.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    DPW_CHECK_FINITE(out, "sub");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        tape.record(out, [ac, bc, oc]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (bc.requires_grad()) {
                auto& gb = bc.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    DPW_CHECK_FINITE(out, "mul");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        tape.record(out, [ac, bc, oc]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                const auto& bv2 = bc.data();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
            }
            if (bc.requires_grad()) {
                auto& gb = bc.grad();
                const auto& av2 = ac.data();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
            }
        });
    }
    return out;
}

Tensor mul_scalar(Tape& tape, const Tensor& a, double c) {
    Tensor out = a.clone();
    out.set_requires_grad(false);
    for (double& v : out.data()) v *= c;
    DPW_CHECK_FINITE(out, "mul_scalar");
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc, c]() mutable {
            const auto& g = oc.grad();
            auto& ga = ac.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
        });
    }
    return out;
}

Tensor mul_scalar_tensor(Tape& tape, const Tensor& a, const Tensor& s) {
    if (s.size() != 1) {
        throw DimensionError("mul_scalar_tensor: gate must be a single element, got " +
                             s.shape_str());
    }
    const double c = s.data()[0];
    Tensor out = a.clone();
    out.set_requires_grad(false);
    for (double& v : out.data()) v *= c;
    DPW_CHECK_FINITE(out, "mul_scalar_tensor");
    if (track(tape, a, s)) {
        out.set_requires_grad(true);
        Tensor ac = a, sc = s, oc = out;
        tape.record(out, [ac, sc, oc, c]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
            }
            if (sc.requires_grad()) {
                const auto& av = ac.data();
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
                sc.grad()[0] += acc;
            }
        });
    }
    return out;
}

Tensor add_rowvec(Tape& tape, const Tensor& a, const Tensor& v) {
    const int n = a.rows(), m = a.cols();
    if (v.size() != m) {
        throw DimensionError("add_rowvec: vector " + v.shape_str() + " does not match columns of " +
                             a.shape_str());
    }
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& vv = v.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) o[static_cast<std::size_t>(i) * m + j] += vv[j];
    DPW_CHECK_FINITE(out, "add_rowvec");
    if (track(tape, a, v)) {
        out.set_requires_grad(true);
        Tensor ac = a, vc = v, oc = out;
        tape.record(out, [ac, vc, oc, n, m]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (vc.requires_grad()) {
                auto& gv = vc.grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) gv[j] += g[static_cast<std::size_t>(i) * m + j];
            }
        });
    }
    return out;
}

Tensor add_colvec(Tape& tape, const Tensor& a, const Tensor& v) {
    const int n = a.rows(), m = a.cols();
    if (v.size() != n) {
        throw DimensionError("add_colvec: vector " + v.shape_str() + " does not match rows of " +
                             a.shape_str());
    }
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& vv = v.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) o[static_cast<std::size_t>(i) * m + j] += vv[i];
    DPW_CHECK_FINITE(out, "add_colvec");
    if (track(tape, a, v)) {
        out.set_requires_grad(true);
        Tensor ac = a, vc = v, oc = out;
        tape.record(out, [ac, vc, oc, n, m]() mutable {
            const auto& g = oc.grad();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (vc.requires_grad()) {
                auto& gv = vc.grad();
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < m; ++j) acc += g[static_cast<std::size_t>(i) * m + j];
                    gv[i] += acc;
                }
            }
        });
    }
    return out;
}

Tensor mul_rowvec(Tape& tape, const Tensor& a, const Tensor& v) {
    const int n = a.rows(), m = a.cols();
    if (v.size() != m) {
        throw DimensionError("mul_rowvec: vector " + v.shape_str() + " does not match columns of " +
                             a.shape_str());
    }
    Tensor out = a.clone();
    out.set_requires_grad(false);
    auto& o = out.data();
    const auto& vv = v.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) o[static_cast<std::size_t>(i) * m + j] *= vv[j];
    DPW_CHECK_FINITE(out, "mul_rowvec");
    if (track(tape, a, v)) {
        out.set_requires_grad(true);
        Tensor ac = a, vc = v, oc = out;
        tape.record(out, [ac, vc, oc, n, m]() mutable {
            const auto& g = oc.grad();
            const auto& vv2 = vc.data();
            const auto& av = ac.data();
            if (ac.requires_grad()) {
                auto& ga = ac.grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                        ga[idx] += g[idx] * vv2[j];
                    }
            }
            if (vc.requires_grad()) {
                auto& gv = vc.grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                        gv[j] += g[idx] * av[idx];
                    }
            }
        });
    }
    return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    DPW_CHECK_FINITE(out, "sum");
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc]() mutable {
            const double g = oc.grad()[0];
            auto& ga = ac.grad();
            for (double& v : ga) v += g;
        });
    }
    return out;
}

Tensor mean(Tape& tape, const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean of empty tensor");
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    Tensor out = Tensor::scalar(acc * inv);
    DPW_CHECK_FINITE(out, "mean");
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc, inv]() mutable {
            const double g = oc.grad()[0] * inv;
            auto& ga = ac.grad();
            for (double& v : ga) v += g;
        });
    }
    return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose: expected rank 2, got " + a.shape_str());
    const int n = a.shape()[0], m = a.shape()[1];
    Tensor out = Tensor::zeros({m, n});
    const auto& av = a.data();
    auto& o = out.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            o[static_cast<std::size_t>(j) * n + i] = av[static_cast<std::size_t>(i) * m + j];
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc, n, m]() mutable {
            const auto& g = oc.grad();
            auto& ga = ac.grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    ga[static_cast<std::size_t>(i) * m + j] +=
                        g[static_cast<std::size_t>(j) * n + i];
        });
    }
    return out;
}

Tensor reshape(Tape& tape, const Tensor& a, std::vector<int> shape) {
    Tensor out = Tensor::from_values(std::move(shape), a.data());
    if (out.size() != a.size()) {
        throw DimensionError("reshape: element count mismatch between " + a.shape_str() +
                             " and " + out.shape_str());
    }
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc]() mutable {
            const auto& g = oc.grad();
            auto& ga = ac.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

Tensor slice_rows(Tape& tape, const Tensor& a, int begin, int end) {
    const int n = a.rows(), m = a.cols();
    if (begin < 0 || end > n || begin >= end) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") invalid for " + a.shape_str());
    }
    const int rows = end - begin;
    std::vector<int> shape = a.rank() == 1 ? std::vector<int>{rows} : std::vector<int>{rows, m};
    Tensor out = Tensor::zeros(shape);
    const auto& av = a.data();
    auto& o = out.data();
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < m; ++j)
            o[static_cast<std::size_t>(i) * m + j] =
                av[static_cast<std::size_t>(i + begin) * m + j];
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc, begin, rows, m]() mutable {
            const auto& g = oc.grad();
            auto& ga = ac.grad();
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < m; ++j)
                    ga[static_cast<std::size_t>(i + begin) * m + j] +=
                        g[static_cast<std::size_t>(i) * m + j];
        });
    }
    return out;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const int m = parts[0].cols();
    const int r = parts[0].rank();
    int total = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        if (p.cols() != m || p.rank() != r) {
            throw DimensionError("concat_rows: mismatched part shape " + p.shape_str());
        }
        total += p.rows();
        any_grad = any_grad || p.requires_grad();
    }
    std::vector<int> shape = r == 1 ? std::vector<int>{total} : std::vector<int>{total, m};
    Tensor out = Tensor::zeros(shape);
    auto& o = out.data();
    std::size_t off = 0;
    for (const auto& p : parts) {
        const auto& pv = p.data();
        for (std::size_t i = 0; i < pv.size(); ++i) o[off + i] = pv[i];
        off += pv.size();
    }
    if (tape.enabled() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> pc = parts;
        Tensor oc = out;
        tape.record(out, [pc, oc]() mutable {
            const auto& g = oc.grad();
            std::size_t off2 = 0;
            for (auto& p : pc) {
                if (p.requires_grad()) {
                    auto& gp = p.grad();
                    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off2 + i];
                }
                off2 += p.data().size();
            }
        });
    }
    return out;
}

Tensor pad_replicate_tail(Tape& tape, const Tensor& a, int target_rows) {
    const int n = a.rows(), m = a.cols();
    if (n < 1) throw DimensionError("pad_replicate_tail: empty input");
    if (target_rows < n) {
        throw DimensionError("pad_replicate_tail: target " + std::to_string(target_rows) +
                             " is shorter than input rows " + std::to_string(n));
    }
    std::vector<int> shape =
        a.rank() == 1 ? std::vector<int>{target_rows} : std::vector<int>{target_rows, m};
    Tensor out = Tensor::zeros(shape);
    const auto& av = a.data();
    auto& o = out.data();
    for (int i = 0; i < target_rows; ++i) {
        const int src = i < n ? i : n - 1;
        for (int j = 0; j < m; ++j)
            o[static_cast<std::size_t>(i) * m + j] = av[static_cast<std::size_t>(src) * m + j];
    }
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        tape.record(out, [ac, oc, n, m, target_rows]() mutable {
            const auto& g = oc.grad();
            auto& ga = ac.grad();
            for (int i = 0; i < target_rows; ++i) {
                const int src = i < n ? i : n - 1;
                for (int j = 0; j < m; ++j)
                    ga[static_cast<std::size_t>(src) * m + j] +=
                        g[static_cast<std::size_t>(i) * m + j];
            }
        });
    }
    return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
    const int d = x.cols() == 1 && x.rank() == 1 ? x.rows() : x.cols();
    const int n = x.rank() == 1 ? 1 : x.rows();
    if (gain.size() != d || bias.size() != d) {
        throw DimensionError("layer_norm: gain/bias of sizes " + std::to_string(gain.size()) +
                             "/" + std::to_string(bias.size()) + " do not match last axis " +
                             std::to_string(d));
    }
    if (eps <= 0.0) throw ContractError("layer_norm: eps must be positive");
    Tensor out = Tensor::zeros(x.shape());
    // Cache the normalized values and inverse stddev per row for backward.
    auto xhat = std::make_shared<std::vector<double>>(x.data().size());
    auto inv_std = std::make_shared<std::vector<double>>(n);
    const auto& xv = x.data();
    const auto& gv = gain.data();
    const auto& bv = bias.data();
    auto& o = out.data();
    for (int i = 0; i < n; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += xv[base + j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xv[base + j] - mu;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (int j = 0; j < d; ++j) {
            const double xh = (xv[base + j] - mu) * is;
            (*xhat)[base + j] = xh;
            o[base + j] = xh * gv[j] + bv[j];
        }
    }
    DPW_CHECK_FINITE(out, "layer_norm");
    if (tape.enabled() && (x.requires_grad() || gain.requires_grad() || bias.requires_grad())) {
        out.set_requires_grad(true);
        Tensor xc = x, gc = gain, bc = bias, oc = out;
        tape.record(out, [xc, gc, bc, oc, xhat, inv_std, n, d]() mutable {
            const auto& g = oc.grad();
            const auto& gv2 = gc.data();
            if (gc.requires_grad()) {
                auto& gg = gc.grad();
                for (int i = 0; i < n; ++i) {
                    const std::size_t base = static_cast<std::size_t>(i) * d;
                    for (int j = 0; j < d; ++j) gg[j] += g[base + j] * (*xhat)[base + j];
                }
            }
            if (bc.requires_grad()) {
                auto& gb = bc.grad();
                for (int i = 0; i < n; ++i) {
                    const std::size_t base = static_cast<std::size_t>(i) * d;
                    for (int j = 0; j < d; ++j) gb[j] += g[base + j];
                }
            }
            if (xc.requires_grad()) {
                auto& gx = xc.grad();
                for (int i = 0; i < n; ++i) {
                    const std::size_t base = static_cast<std::size_t>(i) * d;
                    double mean_gh = 0.0, mean_ghx = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double gh = g[base + j] * gv2[j];
                        mean_gh += gh;
                        mean_ghx += gh * (*xhat)[base + j];
                    }
                    mean_gh /= d;
                    mean_ghx /= d;
                    const double is = (*inv_std)[i];
                    for (int j = 0; j < d; ++j) {
                        const double gh = g[base + j] * gv2[j];
                        gx[base + j] += (gh - mean_gh - (*xhat)[base + j] * mean_ghx) * is;
                    }
                }
            }
        });
    }
    return out;
}

Tensor gelu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const auto& xv = x.data();
    auto& o = out.data();
    const bool tracked = track(tape, x);
    // tanh is the expensive part; keep it for the backward pass when needed.
    std::shared_ptr<std::vector<double>> tanh_cache;
    if (tracked) tanh_cache = std::make_shared<std::vector<double>>(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        const double u = kSqrt2OverPi * (v + kGeluCoef * v * v * v);
        const double t = std::tanh(u);
        if (tracked) (*tanh_cache)[i] = t;
        o[i] = 0.5 * v * (1.0 + t);
    }
    DPW_CHECK_FINITE(out, "gelu");
    if (tracked) {
        out.set_requires_grad(true);
        Tensor xc = x, oc = out;
        tape.record(out, [xc, oc, tanh_cache]() mutable {
            const auto& g = oc.grad();
            const auto& xv2 = xc.data();
            auto& gx = xc.grad();
            for (std::size_t i = 0; i < xv2.size(); ++i) {
                const double v = xv2[i];
                const double t = (*tanh_cache)[i];
                const double sech2 = 1.0 - t * t;
                const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoef * v * v);
                gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * sech2 * du);
            }
        });
    }
    return out;
}

Tensor softmax(Tape& tape, const Tensor& x, int axis) {
    if (x.rank() == 1 && axis != 0) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for rank 1");
    }
    if (x.rank() > 2 || (x.rank() == 2 && axis != 0 && axis != 1)) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " +
                             x.shape_str());
    }
    // rank-1 [n] is treated as one group; rank-2 normalizes down (axis 0) or
    // across (axis 1). outer runs over kept groups, inner over the normalized axis.
    const int n = x.rank() == 1 ? 1 : x.rows();
    const int m = x.rank() == 1 ? static_cast<int>(x.size()) : x.cols();
    const bool along_cols = (x.rank() == 1) || axis == 1;
    const int outer = along_cols ? n : m;
    const int inner = along_cols ? m : n;
    const int ostride = along_cols ? m : 1;
    const int istride = along_cols ? 1 : m;
    Tensor out = Tensor::zeros(x.shape());
    const auto& xv = x.data();
    auto& o = out.data();
    for (int i = 0; i < outer; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * ostride;
        double mx = xv[base];
        for (int j = 1; j < inner; ++j)
            mx = std::max(mx, xv[base + static_cast<std::size_t>(j) * istride]);
        double total = 0.0;
        for (int j = 0; j < inner; ++j) {
            const std::size_t idx = base + static_cast<std::size_t>(j) * istride;
            o[idx] = std::exp(xv[idx] - mx);
            total += o[idx];
        }
        for (int j = 0; j < inner; ++j) o[base + static_cast<std::size_t>(j) * istride] /= total;
    }
    DPW_CHECK_FINITE(out, "softmax");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor xc = x, oc = out;
        tape.record(out, [xc, oc, outer, inner, ostride, istride]() mutable {
            const auto& g = oc.grad();
            const auto& y = oc.data();
            auto& gx = xc.grad();
            for (int i = 0; i < outer; ++i) {
                const std::size_t base = static_cast<std::size_t>(i) * ostride;
                double dot = 0.0;
                for (int j = 0; j < inner; ++j) {
                    const std::size_t idx = base + static_cast<std::size_t>(j) * istride;
                    dot += g[idx] * y[idx];
                }
                for (int j = 0; j < inner; ++j) {
                    const std::size_t idx = base + static_cast<std::size_t>(j) * istride;
                    gx[idx] += y[idx] * (g[idx] - dot);
                }
            }
        });
    }
    return out;
}

} // namespace dpw::ops
