#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prodemb/image.hpp"

namespace prodemb {

/// Half-open pixel rectangle: 0 <= x1 < x2 <= width, 0 <= y1 < y2 <= height.
struct Bbox {
    std::int64_t x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool operator==(const Bbox&) const = default;
    std::size_t width() const { return static_cast<std::size_t>(x2 - x1); }
    std::size_t height() const { return static_cast<std::size_t>(y2 - y1); }
};

/// The ten attribute keys shipped with MBE-format data. Values may be
/// absent for any given product; absent keys are simply missing.
extern const std::array<std::string, 10> kCanonicalAttributeKeys;

struct ProductSide {
    std::string title;
    std::optional<Image> image;
    // ordered (level-name, label) pairs, most general first
    std::vector<std::pair<std::string, std::string>> categories;
    std::map<std::string, std::string> attributes;
    std::optional<Bbox> bbox;

    bool operator==(const ProductSide& o) const {
        return title == o.title && categories == o.categories &&
               attributes == o.attributes && bbox == o.bbox &&
               image.has_value() == o.image.has_value() &&
               (!image ||
                (image->channels == o.image->channels &&
                 image->height == o.image->height &&
                 image->width == o.image->width &&
                 image->pixels == o.image->pixels));
    }

    /// Leaf category label: the last pair, empty string when none.
    std::string leaf_category() const {
        return categories.empty() ? std::string() : categories.back().second;
    }
};

/// One MBE-format triplet: query, purchased positive, hard negative.
struct ProductSample {
    std::string sample_id;
    ProductSide query;
    ProductSide positive;
    ProductSide hard_negative;

    bool operator==(const ProductSample& o) const {
        return sample_id == o.sample_id && query == o.query &&
               positive == o.positive && hard_negative == o.hard_negative;
    }
};

/// Parses one JSONL record. `base_dir` resolves relative image paths.
/// Non-fatal schema oddities (non-canonical attribute keys, too many
/// category levels) are appended to `warnings` when given.
ProductSample parse_sample(const std::string& line,
                           const std::string& base_dir = "",
                           std::vector<std::string>* warnings = nullptr);

/// Serializes to one JSON line (no trailing newline), inline images.
/// parse_sample(serialize_sample(s)) == s.
std::string serialize_sample(const ProductSample& sample);

std::vector<ProductSample> load_jsonl(const std::string& path,
                                      std::vector<std::string>* warnings = nullptr);
void save_jsonl(const std::vector<ProductSample>& samples,
                const std::string& path);

} // namespace prodemb
