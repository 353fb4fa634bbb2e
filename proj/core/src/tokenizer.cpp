#include "prodemb/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace prodemb {

const char* segment_name(Segment s) {
    switch (s) {
        case Segment::Title: return "title";
        case Segment::Category: return "category";
        case Segment::Attribute: return "attribute";
        case Segment::Visual: return "visual";
    }
    return "?";
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

Vocabulary::Vocabulary() {
    words_.push_back("<unk>");
    index_["<unk>"] = 0;
}

Vocabulary Vocabulary::build(const std::vector<ProductSample>& corpus,
                             std::size_t max_size) {
    if (max_size < 2) throw_config("vocabulary size must be at least 2");
    std::map<std::string, std::size_t> freq;
    auto count_words = [&](const std::string& text) {
        for (const std::string& w : split_words(text)) ++freq[w];
    };
    for (const ProductSample& s : corpus) {
        count_words(s.query.title);
        count_words(s.positive.title);
        count_words(s.hard_negative.title);
        for (const auto& [level, label] : s.positive.categories) {
            count_words(label);
        }
        for (const auto& [key, value] : s.positive.attributes) {
            count_words(key);
            count_words(value);
        }
    }
    ++freq[":"]; // attribute key/value separator is always in scope

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(),
                                                            freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (const auto& [word, n] : ranked) {
        if (v.words_.size() >= max_size) break;
        v.index_[word] = v.words_.size();
        v.words_.push_back(word);
    }
    return v;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    if (words.empty() || words[0] != "<unk>") {
        throw_data("vocabulary must start with the <unk> token");
    }
    Vocabulary v;
    v.words_ = std::move(words);
    v.index_.clear();
    for (std::size_t i = 0; i < v.words_.size(); ++i) {
        v.index_[v.words_[i]] = i;
    }
    return v;
}

std::size_t Vocabulary::id_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnkId : it->second;
}

namespace {
void append_words(TokenSequence& seq, const std::string& text, Segment tag,
                  const Vocabulary& vocab) {
    for (const std::string& w : split_words(text)) {
        seq.ids.push_back(vocab.id_of(w));
        seq.segments.push_back(tag);
    }
}
} // namespace

TokenSequence tokenize(const ProductSide& side,
                       bool include_category_and_attributes,
                       const Vocabulary& vocab) {
    TokenSequence seq;
    append_words(seq, side.title, Segment::Title, vocab);
    if (include_category_and_attributes) {
        for (const auto& [level, label] : side.categories) {
            append_words(seq, label, Segment::Category, vocab);
        }
        for (const auto& [key, value] : side.attributes) {
            append_words(seq, key, Segment::Attribute, vocab);
            seq.ids.push_back(vocab.id_of(":"));
            seq.segments.push_back(Segment::Attribute);
            append_words(seq, value, Segment::Attribute, vocab);
        }
    }
    return seq;
}

TokenSequence tokenize_text(const std::string& text, const Vocabulary& vocab) {
    TokenSequence seq;
    append_words(seq, text, Segment::Title, vocab);
    return seq;
}

} // namespace prodemb
