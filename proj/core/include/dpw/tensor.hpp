#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dpw/errors.hpp"

namespace dpw {

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage, so handles can be
/// captured cheaply by backward closures and parameter lists. Use clone() for
/// a deep copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(s_); }

    const std::vector<int>& shape() const;
    int rank() const;
    std::int64_t size() const;

    /// Rank-2 accessors; a rank-1 tensor of n elements counts as n rows, 1 column.
    int rows() const;
    int cols() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;

    bool requires_grad() const;
    void set_requires_grad(bool v);

    /// Gradient buffer, allocated (zero-filled) on first access.
    std::vector<double>& grad();
    /// Read-only gradient, or nullptr when never allocated.
    const std::vector<double>* grad_if() const;
    bool has_grad() const { return grad_if() != nullptr; }
    /// Zero-fills the gradient buffer, allocating it if absent.
    void zero_grad();

    /// Value of a single-element tensor.
    double value() const;
    double at(int i) const;
    double at(int i, int j) const;

    /// Deep copy of the values (gradient not copied, requires_grad preserved).
    Tensor clone() const;

    /// True when both handles alias the same storage.
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

    std::string shape_str() const;

private:
    struct Storage {
        std::vector<int> shape;
        std::vector<double> data;
        std::vector<double> grad; // empty until requested
        bool requires_grad = false;
    };

    std::shared_ptr<Storage> s_;

    Storage& st();
    const Storage& st() const;
};

/// Reverse-mode tape: ordered log of backward rules, replayed in reverse.
///
/// Every recorded entry stores the op's output handle so backward() can reset
/// non-leaf gradients before seeding the loss; leaf gradients accumulate
/// across repeated backward() calls until the caller zeroes them.
class Tape {
public:
    explicit Tape(bool enabled = true) : enabled_(enabled) {}

    bool enabled() const { return enabled_; }

    void record(Tensor output, std::function<void()> backward_step);

    /// Seeds d(loss)/d(loss) = 1 and replays backward rules newest-first.
    void backward(const Tensor& loss);

    void clear();
    std::size_t size() const { return records_.size(); }

private:
    struct Record {
        Tensor output;
        std::function<void()> step;
    };

    std::vector<Record> records_;
    bool enabled_;
};

} // namespace dpw
