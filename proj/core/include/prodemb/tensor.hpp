#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prodemb/error.hpp"

namespace prodemb {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData {
    Shape shape;
    std::vector<double> value;
    bool requires_grad = false;
    std::uint64_t id = 0; // unique per allocation, keys tape gradient buffers
};

/// Dense row-major tensor of 64-bit reals. Cheap to copy: a handle onto
/// shared storage. Gradients are not stored here; they live on the
/// GradTape that recorded the operations (see GradTape::gradient).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor vector(std::vector<double> data, bool requires_grad = false);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t numel() const { return d_->value.size(); }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }

    bool is_scalar() const { return d_->shape.empty(); }
    double scalar_value() const;

    std::span<const double> value() const { return d_->value; }
    std::span<double> mutable_value() { return d_->value; }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool rg) { d_->requires_grad = rg; }

    std::uint64_t id() const { return d_->id; }
    const std::shared_ptr<TensorData>& data_ptr() const { return d_; }

    bool all_finite() const;

    /// Deep copy with requires_grad = false; detaches from any graph.
    Tensor detached_copy() const;

private:
    explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<TensorData> d_;
};

/// Ordered record of the primitive operations of one forward pass.
/// Ops append nodes in execution order, which is a topological order by
/// construction; backward() replays them in reverse, accumulating
/// gradients into per-tensor buffers owned by the tape. Keeping the
/// gradients tape-local lets independent tapes (one per sample) run
/// back-to-back or on separate threads without touching shared state.
class GradTape {
public:
    struct Node {
        const char* op;
        std::vector<std::uint64_t> inputs;
        std::uint64_t output;
        std::function<void(GradTape&)> backward;
    };

    void record(const char* op, std::vector<std::uint64_t> inputs,
                std::uint64_t output, std::function<void(GradTape&)> backward);

    /// Runs reverse-mode accumulation from a scalar loss. `seed` scales
    /// the whole gradient (used for averaging a sum of per-sample losses).
    void backward(const Tensor& loss, double seed = 1.0);

    /// Gradient of the last backward() with respect to `t`. Zeros if the
    /// tensor did not contribute to the loss.
    std::span<const double> gradient(const Tensor& t);

    /// Mutable accumulation buffer for a tensor, created zeroed on first
    /// use. Called from node backward closures.
    std::span<double> grad_buffer(const TensorData& d);

    /// Buffer if it exists, empty span otherwise (off-path outputs).
    std::span<const double> grad_if_any(const TensorData& d) const;

    std::size_t node_count() const { return nodes_.size(); }
    void clear();

private:
    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, std::vector<double>> grads_;
};

/// Installs a tape as the thread's active recording target for the
/// lifetime of the scope. Ops record onto it when any input requires
/// gradients; with no active tape they are plain value computations.
class TapeScope {
public:
    explicit TapeScope(GradTape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    GradTape* prev_;
};

/// Suspends recording for the scope: ops run as plain value computations
/// even if an outer tape is installed.
class NoTapeScope {
public:
    NoTapeScope();
    ~NoTapeScope();
    NoTapeScope(const NoTapeScope&) = delete;
    NoTapeScope& operator=(const NoTapeScope&) = delete;

private:
    GradTape* prev_;
};

GradTape* active_tape();

} // namespace prodemb
