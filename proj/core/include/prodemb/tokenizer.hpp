#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "prodemb/sample.hpp"

namespace prodemb {

enum class Segment : std::uint8_t { Title = 0, Category = 1, Attribute = 2, Visual = 3 };

const char* segment_name(Segment s);

/// Token ids with parallel segment tags. Segment runs appear in the
/// fixed order title, category, attribute.
struct TokenSequence {
    std::vector<std::size_t> ids;
    std::vector<Segment> segments;
    std::size_t length() const { return ids.size(); }
};

std::vector<std::string> split_words(const std::string& text);

/// Whitespace word-level vocabulary. Id 0 is the reserved UNK token;
/// out-of-vocabulary words map to it.
class Vocabulary {
public:
    static constexpr std::size_t kUnkId = 0;

    Vocabulary();

    /// Builds from a corpus: titles of all three sides plus the
    /// positive's category labels and attribute keys/values. Words are
    /// kept by descending frequency (ties by word) up to max_size - 1
    /// slots plus UNK.
    static Vocabulary build(const std::vector<ProductSample>& corpus,
                            std::size_t max_size);

    static Vocabulary from_words(std::vector<std::string> words);

    std::size_t id_of(const std::string& word) const;
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Tokenizes one product side: title words tagged Title; when the flag
/// is set, category labels (all levels, most general first) tagged
/// Category, then per attribute key (sorted) the key words, ":", and
/// the value words tagged Attribute.
TokenSequence tokenize(const ProductSide& side,
                       bool include_category_and_attributes,
                       const Vocabulary& vocab);

/// Plain text tokenization (candidate labels, attribute prompts): every
/// word tagged Title.
TokenSequence tokenize_text(const std::string& text, const Vocabulary& vocab);

} // namespace prodemb
