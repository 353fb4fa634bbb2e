#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prodemb/kvconfig.hpp"
#include "prodemb/sample.hpp"

namespace prodemb {

/// Settings for the synthetic corpus. Each product identity is a
/// (shape, color) pair; its leaf category is the shape. Queries are
/// perturbed renderings of the identity (shifted shape, fresh background
/// noise, paraphrased title); hard negatives are a different identity
/// from the same leaf category.
struct GenConfig {
    std::size_t identities = 64;
    std::size_t categories = 8;
    std::size_t image_size = 32;
    double noise = 0.3;
    std::uint64_t seed = 1;
    std::size_t train_per_identity = 4;
    std::size_t eval_per_identity = 1;

    static GenConfig from_kv(const KvConfig& kv);
    void validate() const;
};

struct SyntheticData {
    std::vector<ProductSample> train;
    std::vector<ProductSample> eval;
};

SyntheticData generate_synthetic(const GenConfig& config);

/// Shape vocabulary backing the leaf categories, in category order.
const std::vector<std::string>& synthetic_shape_names();
const std::vector<std::string>& synthetic_color_names();

} // namespace prodemb
