#include "prodemb/candidates.hpp"

#include <algorithm>
#include <set>

namespace prodemb {

CandidateSets build_candidate_sets(const std::vector<ProductSample>& corpus,
                                   const std::string& level) {
    if (corpus.empty()) throw_data("build_candidate_sets: empty corpus");
    std::set<std::string> labels;
    std::map<std::string, std::set<std::string>> values;
    bool level_seen = false;
    for (const ProductSample& s : corpus) {
        const auto& cats = s.positive.categories;
        if (level == "leaf") {
            if (!cats.empty()) {
                labels.insert(cats.back().second);
                level_seen = true;
            }
        } else {
            for (const auto& [name, label] : cats) {
                if (name == level) {
                    labels.insert(label);
                    level_seen = true;
                }
            }
        }
        for (const auto& [key, value] : s.positive.attributes) {
            values[key].insert(value);
        }
    }
    if (!level_seen) {
        throw_data("build_candidate_sets: level '" + level +
                   "' absent from all samples");
    }
    CandidateSets out;
    out.categories.assign(labels.begin(), labels.end());
    for (auto& [key, set] : values) {
        out.attribute_values[key].assign(set.begin(), set.end());
    }
    return out;
}

} // namespace prodemb
