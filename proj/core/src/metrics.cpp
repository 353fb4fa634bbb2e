#include "prodemb/metrics.hpp"

#include <set>

namespace prodemb {

double f_beta(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

PrfReport prf_metrics(const std::vector<std::string>& truth,
                      const std::vector<std::string>& predicted, double beta) {
    if (truth.size() != predicted.size()) {
        throw_runtime("prf_metrics: length mismatch " +
                      std::to_string(truth.size()) + " vs " +
                      std::to_string(predicted.size()));
    }
    if (beta <= 0.0) throw_runtime("prf_metrics: beta must be > 0");
    if (truth.empty()) throw_runtime("prf_metrics: empty inputs");

    std::set<std::string> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());

    PrfReport r;
    r.beta = beta;
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == predicted[i]) ++correct;
    }
    r.accuracy = double(correct) / double(truth.size());

    std::uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (const std::string& c : classes) {
        ConfusionCounts cc;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool is_true = truth[i] == c;
            const bool is_pred = predicted[i] == c;
            if (is_true && is_pred) ++cc.tp;
            else if (!is_true && is_pred) ++cc.fp;
            else if (is_true && !is_pred) ++cc.fn;
            else ++cc.tn;
        }
        const double p = (cc.tp + cc.fp) == 0
                             ? 0.0
                             : double(cc.tp) / double(cc.tp + cc.fp);
        const double rec = (cc.tp + cc.fn) == 0
                               ? 0.0
                               : double(cc.tp) / double(cc.tp + cc.fn);
        r.precision_macro += p;
        r.recall_macro += rec;
        r.f_macro += f_beta(p, rec, beta);
        tp_sum += cc.tp;
        fp_sum += cc.fp;
        fn_sum += cc.fn;
        r.per_class[c] = cc;
    }
    const double nc = double(classes.size());
    r.precision_macro /= nc;
    r.recall_macro /= nc;
    r.f_macro /= nc;
    r.precision_micro = (tp_sum + fp_sum) == 0
                            ? 0.0
                            : double(tp_sum) / double(tp_sum + fp_sum);
    r.recall_micro = (tp_sum + fn_sum) == 0
                         ? 0.0
                         : double(tp_sum) / double(tp_sum + fn_sum);
    r.f_micro = f_beta(r.precision_micro, r.recall_micro, beta);
    return r;
}

} // namespace prodemb
