#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prodemb/error.hpp"

namespace prodemb {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::uint64_t total() const { return tp + fp + fn + tn; }
};

/// Classification metrics over single-label predictions. Per-class
/// precision/recall use 0/0 -> 0; F_beta uses 0 when its denominator is
/// 0. Macro averages are unweighted class means; micro pools counts.
struct PrfReport {
    double accuracy = 0.0;
    double precision_macro = 0.0, recall_macro = 0.0, f_macro = 0.0;
    double precision_micro = 0.0, recall_micro = 0.0, f_micro = 0.0;
    double beta = 1.0;
    std::map<std::string, ConfusionCounts> per_class;
};

double f_beta(double precision, double recall, double beta);

PrfReport prf_metrics(const std::vector<std::string>& truth,
                      const std::vector<std::string>& predicted, double beta);

} // namespace prodemb
