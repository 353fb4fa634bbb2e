#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "prodemb/tensor.hpp"

namespace prodemb {

/// Adam with bias correction. One slot of first/second moments per
/// parameter tensor, shape-matched.
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState init(std::span<const Tensor> params, double lr);
};

/// One bias-corrected update. Mutates the parameter values in place and
/// returns the advanced state (step incremented, moments updated).
[[nodiscard]] AdamState adam_step(AdamState state, std::span<Tensor> params,
                                  const std::vector<std::vector<double>>& grads);

/// Linear warmup from 0 to peak over ceil(warmup_ratio * total_steps)
/// steps, then cosine decay to min_lr at total_steps.
struct LrSchedule {
    double peak_lr = 3e-4;
    std::uint64_t total_steps = 2000;
    double warmup_ratio = 0.05;
    double min_lr = 0.0;

    std::uint64_t warmup_steps() const;
};

double lr_at(const LrSchedule& schedule, std::uint64_t step);

/// Central-difference check of reverse-mode gradients.
/// `loss_fn` rebuilds the scalar loss from the current parameter values;
/// it is run once under a tape for analytic gradients, then twice per
/// coordinate at params +/- h. Returns
///   max_i |analytic_i - central_i| / max(1, |analytic_i|).
double finite_diff_check(const std::function<Tensor()>& loss_fn,
                         std::span<Tensor> params, double h);

} // namespace prodemb
