#include "prodemb/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace prodemb {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local GradTape* g_active_tape = nullptr;

std::shared_ptr<TensorData> make_data(Shape shape, std::vector<double> value,
                                      bool requires_grad) {
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->value = std::move(value);
    d->requires_grad = requires_grad;
    d->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return d;
}
} // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return Tensor(make_data(std::move(shape), std::vector<double>(n, 0.0),
                            requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return Tensor(make_data(std::move(shape), std::vector<double>(n, v),
                            requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw_runtime("tensor shape " + shape_str(shape) + " does not match " +
                      std::to_string(data.size()) + " elements");
    }
    return Tensor(make_data(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(make_data({}, {v}, requires_grad));
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
    Shape shape{data.size()};
    return Tensor(make_data(std::move(shape), std::move(data), requires_grad));
}

double Tensor::scalar_value() const {
    if (numel() != 1) {
        throw_runtime("scalar_value on tensor of shape " + shape_str(shape()));
    }
    return d_->value[0];
}

bool Tensor::all_finite() const {
    for (double v : d_->value) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::detached_copy() const {
    return Tensor(make_data(d_->shape, d_->value, false));
}

void GradTape::record(const char* op, std::vector<std::uint64_t> inputs,
                      std::uint64_t output,
                      std::function<void(GradTape&)> backward) {
    nodes_.push_back(Node{op, std::move(inputs), output, std::move(backward)});
}

void GradTape::backward(const Tensor& loss, double seed) {
    if (!loss.is_scalar()) {
        throw_runtime("backward requires a scalar loss, got shape " +
                      shape_str(loss.shape()));
    }
    auto& g = grads_[loss.id()];
    g.assign(1, seed);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->backward(*this);
    }
}

std::span<const double> GradTape::gradient(const Tensor& t) {
    auto& g = grads_[t.id()];
    if (g.size() != t.numel()) g.assign(t.numel(), 0.0);
    return g;
}

std::span<double> GradTape::grad_buffer(const TensorData& d) {
    auto& g = grads_[d.id];
    if (g.size() != d.value.size()) g.assign(d.value.size(), 0.0);
    return g;
}

std::span<const double> GradTape::grad_if_any(const TensorData& d) const {
    auto it = grads_.find(d.id);
    if (it == grads_.end()) return {};
    return it->second;
}

void GradTape::clear() {
    nodes_.clear();
    grads_.clear();
}

TapeScope::TapeScope(GradTape& tape) : prev_(g_active_tape) {
    g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = prev_; }

NoTapeScope::NoTapeScope() : prev_(g_active_tape) { g_active_tape = nullptr; }

NoTapeScope::~NoTapeScope() { g_active_tape = prev_; }

GradTape* active_tape() { return g_active_tape; }

} // namespace prodemb
