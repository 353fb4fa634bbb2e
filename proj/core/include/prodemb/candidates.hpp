#pragma once

#include <map>
#include <string>
#include <vector>

#include "prodemb/sample.hpp"

namespace prodemb {

/// Candidate label sets for the embedding-matching tasks: the distinct
/// category labels at one hierarchy level, and per attribute key the
/// distinct values observed on positives. Sorted, deduplicated, and
/// independent of corpus order.
struct CandidateSets {
    std::vector<std::string> categories;
    std::map<std::string, std::vector<std::string>> attribute_values;
};

/// `level` is a level name ("industry", "level1", ...) or "leaf" for the
/// deepest level present on each sample.
CandidateSets build_candidate_sets(const std::vector<ProductSample>& corpus,
                                   const std::string& level);

} // namespace prodemb
