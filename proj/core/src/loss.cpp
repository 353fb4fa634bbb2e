#include "prodemb/loss.hpp"

#include <algorithm>
#include <cmath>

namespace prodemb {

namespace {
std::vector<double> normalized_copy(std::span<const double> v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double norm = std::sqrt(n2);
    if (norm == 0.0) throw_runtime("similarity: zero-norm vector");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return out;
}

double raw_dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw_runtime("similarity: dimension mismatch " +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
} // namespace

double similarity(std::span<const double> a, std::span<const double> b,
                  bool normalize) {
    if (!normalize) return raw_dot(a, b);
    const std::vector<double> an = normalized_copy(a);
    const std::vector<double> bn = normalized_copy(b);
    return raw_dot(an, bn);
}

double similarity(const Embedding& a, const Embedding& b, bool normalize) {
    return similarity(std::span<const double>(a.values),
                      std::span<const double>(b.values), normalize);
}

double info_nce(std::span<const double> query,
                std::span<const double> positive,
                std::span<const std::span<const double>> negatives,
                const LossConfig& cfg) {
    cfg.validate();
    if (negatives.empty()) throw_runtime("info_nce: empty negatives");

    std::vector<double> q(query.begin(), query.end());
    std::vector<double> p(positive.begin(), positive.end());
    if (cfg.normalize) {
        q = normalized_copy(q);
        p = normalized_copy(p);
    }
    std::vector<double> logits;
    logits.reserve(1 + negatives.size());
    logits.push_back(raw_dot(q, p) / cfg.temperature);
    for (const auto& n : negatives) {
        if (cfg.normalize) {
            logits.push_back(raw_dot(q, normalized_copy(n)) /
                             cfg.temperature);
        } else {
            logits.push_back(raw_dot(q, n) / cfg.temperature);
        }
    }
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    return mx + std::log(sum) - logits[0];
}

double info_nce(const Embedding& query, const Embedding& positive,
                const std::vector<Embedding>& negatives,
                const LossConfig& cfg) {
    std::vector<std::span<const double>> negs;
    negs.reserve(negatives.size());
    for (const Embedding& n : negatives) negs.emplace_back(n.values);
    return info_nce(query.values, positive.values, negs, cfg);
}

} // namespace prodemb
