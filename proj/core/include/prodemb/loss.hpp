#pragma once

#include <span>
#include <vector>

#include "prodemb/encoder.hpp"

namespace prodemb {

struct LossConfig {
    double temperature = 0.07;
    bool normalize = false; // encode() already normalizes by default

    void validate() const {
        if (temperature <= 0.0) {
            throw_config("temperature must be > 0");
        }
    }
};

/// Dot product, optionally of L2-normalized copies.
double similarity(std::span<const double> a, std::span<const double> b,
                  bool normalize = false);
double similarity(const Embedding& a, const Embedding& b,
                  bool normalize = false);

/// InfoNCE over plain values (evaluation/tests):
///   -log( exp(s_p/tau) / (exp(s_p/tau) + sum_n exp(s_n/tau)) )
/// with log-sum-exp stabilization. cfg.normalize applies to all inputs.
double info_nce(std::span<const double> query, std::span<const double> positive,
                std::span<const std::span<const double>> negatives,
                const LossConfig& cfg);
double info_nce(const Embedding& query, const Embedding& positive,
                const std::vector<Embedding>& negatives,
                const LossConfig& cfg);

} // namespace prodemb
