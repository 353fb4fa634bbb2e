#include "prodemb/optim.hpp"

#include <cmath>

namespace prodemb {

AdamState AdamState::init(std::span<const Tensor> params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
        s.m.emplace_back(p.numel(), 0.0);
        s.v.emplace_back(p.numel(), 0.0);
    }
    return s;
}

AdamState adam_step(AdamState state, std::span<Tensor> params,
                    const std::vector<std::vector<double>>& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw_runtime("adam_step: parameter/gradient count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto pv = params[i].mutable_value();
        const auto& g = grads[i];
        if (g.size() != pv.size()) {
            throw_runtime("adam_step: shape mismatch for parameter " +
                          std::to_string(i));
        }
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < pv.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            pv[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
    return state;
}

std::uint64_t LrSchedule::warmup_steps() const {
    return static_cast<std::uint64_t>(
        std::ceil(warmup_ratio * static_cast<double>(total_steps)));
}

double lr_at(const LrSchedule& schedule, std::uint64_t step) {
    if (step > schedule.total_steps) {
        throw_runtime("lr_at: step " + std::to_string(step) +
                      " out of range [0, " +
                      std::to_string(schedule.total_steps) + "]");
    }
    const std::uint64_t warm = schedule.warmup_steps();
    if (step <= warm) {
        if (warm == 0) return schedule.peak_lr;
        return schedule.peak_lr * static_cast<double>(step) /
               static_cast<double>(warm);
    }
    const double span = static_cast<double>(schedule.total_steps - warm);
    const double x = static_cast<double>(step - warm) / span;
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    return schedule.min_lr + (schedule.peak_lr - schedule.min_lr) * cosine;
}

double finite_diff_check(const std::function<Tensor()>& loss_fn,
                         std::span<Tensor> params, double h) {
    if (h <= 0.0) throw_runtime("finite_diff_check: h must be > 0");

    GradTape tape;
    std::vector<std::vector<double>> analytic;
    {
        TapeScope scope(tape);
        Tensor loss = loss_fn();
        if (!loss.all_finite()) {
            throw_runtime("finite_diff_check: non-finite loss");
        }
        tape.backward(loss);
        for (Tensor& p : params) {
            auto g = tape.gradient(p);
            analytic.emplace_back(g.begin(), g.end());
        }
    }

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto pv = params[i].mutable_value();
        for (std::size_t j = 0; j < pv.size(); ++j) {
            const double keep = pv[j];
            pv[j] = keep + h;
            const double up = loss_fn().scalar_value();
            pv[j] = keep - h;
            const double down = loss_fn().scalar_value();
            pv[j] = keep;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw_runtime(
                    "finite_diff_check: non-finite loss at perturbed point");
            }
            const double central = (up - down) / (2.0 * h);
            const double a = analytic[i][j];
            const double err =
                std::abs(a - central) / std::max(1.0, std::abs(a));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

} // namespace prodemb
