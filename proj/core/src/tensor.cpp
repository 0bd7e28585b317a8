#include "dpw/tensor.hpp"

#include <numeric>
#include <sstream>

namespace dpw {

namespace {

std::int64_t shape_product(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative dimension in shape");
        n *= d;
    }
    return n;
}

} // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    const std::int64_t n = shape_product(shape);
    t.s_->shape = std::move(shape);
    t.s_->data.assign(static_cast<std::size_t>(n), value);
    t.s_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
    const std::int64_t n = shape_product(shape);
    if (n != static_cast<std::int64_t>(values.size())) {
        throw DimensionError("from_values: got " + std::to_string(values.size()) +
                             " values for a shape of " + std::to_string(n) + " elements");
    }
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = std::move(shape);
    t.s_->data = std::move(values);
    t.s_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

Tensor::Storage& Tensor::st() {
    if (!s_) throw ContractError("use of an undefined Tensor");
    return *s_;
}

const Tensor::Storage& Tensor::st() const {
    if (!s_) throw ContractError("use of an undefined Tensor");
    return *s_;
}

const std::vector<int>& Tensor::shape() const { return st().shape; }

int Tensor::rank() const { return static_cast<int>(st().shape.size()); }

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(st().data.size()); }

int Tensor::rows() const {
    const auto& sh = st().shape;
    if (sh.empty()) throw DimensionError("rows() on rank-0 tensor");
    return sh[0];
}

int Tensor::cols() const {
    const auto& sh = st().shape;
    if (sh.size() == 1) return 1;
    if (sh.size() == 2) return sh[1];
    throw DimensionError("cols() on tensor of rank " + std::to_string(sh.size()));
}

std::vector<double>& Tensor::data() { return st().data; }
const std::vector<double>& Tensor::data() const { return st().data; }

bool Tensor::requires_grad() const { return st().requires_grad; }
void Tensor::set_requires_grad(bool v) { st().requires_grad = v; }

std::vector<double>& Tensor::grad() {
    auto& s = st();
    if (s.grad.empty() && !s.data.empty()) s.grad.assign(s.data.size(), 0.0);
    return s.grad;
}

const std::vector<double>* Tensor::grad_if() const {
    const auto& s = st();
    return s.grad.empty() ? nullptr : &s.grad;
}

void Tensor::zero_grad() {
    auto& s = st();
    s.grad.assign(s.data.size(), 0.0);
}

double Tensor::value() const {
    const auto& s = st();
    if (s.data.size() != 1) {
        throw DimensionError("value() on non-scalar tensor of shape " + shape_str());
    }
    return s.data[0];
}

double Tensor::at(int i) const {
    const auto& s = st();
    if (i < 0 || static_cast<std::size_t>(i) >= s.data.size()) {
        throw DimensionError("index " + std::to_string(i) + " out of range");
    }
    return s.data[static_cast<std::size_t>(i)];
}

double Tensor::at(int i, int j) const {
    const auto& s = st();
    if (s.shape.size() != 2) throw DimensionError("at(i,j) on tensor of shape " + shape_str());
    const int r = s.shape[0], c = s.shape[1];
    if (i < 0 || i >= r || j < 0 || j >= c) {
        throw DimensionError("index (" + std::to_string(i) + "," + std::to_string(j) +
                             ") out of range for shape " + shape_str());
    }
    return s.data[static_cast<std::size_t>(i) * c + j];
}

Tensor Tensor::clone() const {
    const auto& s = st();
    return from_values(s.shape, s.data, s.requires_grad);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    const auto& sh = st().shape;
    for (std::size_t i = 0; i < sh.size(); ++i) {
        if (i) os << "x";
        os << sh[i];
    }
    os << "]";
    return os.str();
}

void Tape::record(Tensor output, std::function<void()> backward_step) {
    if (!enabled_) return;
    records_.push_back({std::move(output), std::move(backward_step)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " + loss.shape_str());
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward: loss was not produced on this tape "
                            "(requires_grad is false)");
    }
    // Non-leaf grads are transient per pass; leaves keep accumulating.
    for (auto& r : records_) r.output.zero_grad();
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->step();
}

void Tape::clear() { records_.clear(); }

} // namespace dpw
