#include "prodemb/sample.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace prodemb {

using json = nlohmann::ordered_json;

const std::array<std::string, 10> kCanonicalAttributeKeys = {
    "color",          "category",       "category modifier",
    "brand",          "size/specification", "material",
    "style elements", "fashion style",  "target demographic",
    "season/occasion"};

namespace {

bool is_canonical_key(const std::string& key) {
    return std::find(kCanonicalAttributeKeys.begin(),
                     kCanonicalAttributeKeys.end(),
                     key) != kCanonicalAttributeKeys.end();
}

Image image_from_json(const json& j, const std::string& field,
                      const std::string& base_dir) {
    if (j.is_string()) {
        std::filesystem::path p(j.get<std::string>());
        if (p.is_relative() && !base_dir.empty()) {
            p = std::filesystem::path(base_dir) / p;
        }
        return load_raw_image(p.string());
    }
    if (!j.is_array()) {
        throw_data("parse error: " + field +
                   " must be a nested array or a file path");
    }
    const std::size_t channels = j.size();
    if (channels == 0) throw_data("parse error: empty image (" + field + ")");
    const std::size_t height = j[0].size();
    if (height == 0) throw_data("parse error: empty image (" + field + ")");
    const std::size_t width = j[0][0].size();
    Image img(channels, height, width);
    for (std::size_t c = 0; c < channels; ++c) {
        if (j[c].size() != height) {
            throw_data("parse error: ragged image rows (" + field + ")");
        }
        for (std::size_t y = 0; y < height; ++y) {
            if (j[c][y].size() != width) {
                throw_data("parse error: ragged image columns (" + field +
                           ")");
            }
            for (std::size_t x = 0; x < width; ++x) {
                const double v = j[c][y][x].get<double>();
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw_data("parse error: image-pixel-range (" + field +
                               ")");
                }
                img.at(c, y, x) = v;
            }
        }
    }
    return img;
}

json image_to_json(const Image& img) {
    json channels = json::array();
    for (std::size_t c = 0; c < img.channels; ++c) {
        json rows = json::array();
        for (std::size_t y = 0; y < img.height; ++y) {
            json row = json::array();
            for (std::size_t x = 0; x < img.width; ++x) {
                row.push_back(img.at(c, y, x));
            }
            rows.push_back(std::move(row));
        }
        channels.push_back(std::move(rows));
    }
    return channels;
}

Bbox parse_bbox_string(const std::string& text, const std::string& field) {
    std::string t = text;
    if (t.size() < 2 || t.front() != '(' || t.back() != ')') {
        throw_data("parse error: bbox-format (" + field + "): '" + text + "'");
    }
    t = t.substr(1, t.size() - 2);
    std::array<std::int64_t, 4> vals{};
    std::size_t at = 0;
    for (int i = 0; i < 4; ++i) {
        const auto comma = t.find(',', at);
        const std::string piece =
            t.substr(at, comma == std::string::npos ? std::string::npos
                                                    : comma - at);
        try {
            std::size_t pos = 0;
            vals[i] = std::stoll(piece, &pos);
            while (pos < piece.size() && std::isspace(piece[pos])) ++pos;
            if (pos != piece.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw_data("parse error: bbox-format (" + field + "): '" + text +
                       "'");
        }
        if (i < 3) {
            if (comma == std::string::npos) {
                throw_data("parse error: bbox-format (" + field + "): '" +
                           text + "'");
            }
            at = comma + 1;
        } else if (comma != std::string::npos) {
            throw_data("parse error: bbox-format (" + field + "): '" + text +
                       "'");
        }
    }
    return Bbox{vals[0], vals[1], vals[2], vals[3]};
}

std::string bbox_to_string(const Bbox& b) {
    return "(" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
           std::to_string(b.x2) + "," + std::to_string(b.y2) + ")";
}

void validate_bbox(const Bbox& b, const std::optional<Image>& image,
                   const std::string& field) {
    if (!(b.x1 < b.x2 && b.y1 < b.y2)) {
        throw_data("parse error: bbox-degenerate (" + field + "): " +
                   bbox_to_string(b));
    }
    if (b.x1 < 0 || b.y1 < 0) {
        throw_data("parse error: bbox-out-of-bounds (" + field + "): " +
                   bbox_to_string(b));
    }
    if (image) {
        if (b.x2 > static_cast<std::int64_t>(image->width) ||
            b.y2 > static_cast<std::int64_t>(image->height)) {
            throw_data("parse error: bbox-out-of-bounds (" + field + "): " +
                       bbox_to_string(b));
        }
    }
}

std::string require_title(const json& j, const std::string& field) {
    if (!j.contains(field)) {
        throw_data("parse error: missing mandatory title (" + field + ")");
    }
    if (!j[field].is_string()) {
        throw_data("parse error: " + field + " must be a string");
    }
    return j[field].get<std::string>();
}

} // namespace

ProductSample parse_sample(const std::string& line,
                           const std::string& base_dir,
                           std::vector<std::string>* warnings) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw_data(std::string("parse error: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw_data("parse error: record is not a JSON object");

    ProductSample s;
    s.sample_id = j.value("sample_id", std::string());

    s.query.title = require_title(j, "query_title");
    if (j.contains("query_image")) {
        s.query.image = image_from_json(j["query_image"], "query_image",
                                        base_dir);
    }
    if (j.contains("query_bbox")) {
        if (!j["query_bbox"].is_string()) {
            throw_data("parse error: query_bbox must be a string");
        }
        Bbox b = parse_bbox_string(j["query_bbox"].get<std::string>(),
                                   "query_bbox");
        validate_bbox(b, s.query.image, "query_bbox");
        s.query.bbox = b;
    }

    s.positive.title = require_title(j, "pos_title");
    if (j.contains("pos_image")) {
        s.positive.image = image_from_json(j["pos_image"], "pos_image",
                                           base_dir);
    }
    if (j.contains("pos_categories")) {
        if (!j["pos_categories"].is_array()) {
            throw_data("parse error: pos_categories must be an array");
        }
        for (const auto& pair : j["pos_categories"]) {
            if (!pair.is_array() || pair.size() != 2 ||
                !pair[0].is_string() || !pair[1].is_string()) {
                throw_data(
                    "parse error: pos_categories entries must be "
                    "[level, label] string pairs");
            }
            s.positive.categories.emplace_back(pair[0].get<std::string>(),
                                               pair[1].get<std::string>());
        }
        if (warnings && s.positive.categories.size() > 5) {
            warnings->push_back(s.sample_id +
                                ": more than 5 category levels");
        }
    }
    if (j.contains("pos_attributes")) {
        if (!j["pos_attributes"].is_object()) {
            throw_data("parse error: pos_attributes must be an object");
        }
        for (const auto& [key, value] : j["pos_attributes"].items()) {
            if (!value.is_string()) {
                throw_data("parse error: attribute '" + key +
                           "' must be a string");
            }
            s.positive.attributes[key] = value.get<std::string>();
            if (warnings && !is_canonical_key(key)) {
                warnings->push_back(s.sample_id +
                                    ": non-canonical attribute key '" + key +
                                    "'");
            }
        }
    }

    s.hard_negative.title = require_title(j, "neg_title");
    if (j.contains("neg_image")) {
        s.hard_negative.image = image_from_json(j["neg_image"], "neg_image",
                                                base_dir);
    }

    if (warnings && !s.positive.categories.empty() &&
        !s.hard_negative.title.empty() &&
        s.hard_negative.title == s.positive.title) {
        warnings->push_back(s.sample_id +
                            ": hard negative has the positive's identity");
    }
    return s;
}

std::string serialize_sample(const ProductSample& s) {
    json j = json::object();
    j["sample_id"] = s.sample_id;
    j["query_title"] = s.query.title;
    if (s.query.image) j["query_image"] = image_to_json(*s.query.image);
    if (s.query.bbox) j["query_bbox"] = bbox_to_string(*s.query.bbox);
    j["pos_title"] = s.positive.title;
    if (s.positive.image) j["pos_image"] = image_to_json(*s.positive.image);
    if (!s.positive.categories.empty()) {
        json cats = json::array();
        for (const auto& [level, label] : s.positive.categories) {
            cats.push_back(json::array({level, label}));
        }
        j["pos_categories"] = std::move(cats);
    }
    if (!s.positive.attributes.empty()) {
        json attrs = json::object();
        for (const auto& [key, value] : s.positive.attributes) {
            attrs[key] = value;
        }
        j["pos_attributes"] = std::move(attrs);
    }
    j["neg_title"] = s.hard_negative.title;
    if (s.hard_negative.image) {
        j["neg_image"] = image_to_json(*s.hard_negative.image);
    }
    return j.dump();
}

std::vector<ProductSample> load_jsonl(const std::string& path,
                                      std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open dataset: " + path);
    const std::string base_dir =
        std::filesystem::path(path).parent_path().string();
    std::vector<ProductSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_sample(line, base_dir, warnings));
        } catch (const Error& e) {
            throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " +
                                      e.what());
        }
    }
    return out;
}

void save_jsonl(const std::vector<ProductSample>& samples,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_data("cannot write dataset: " + path);
    for (const ProductSample& s : samples) {
        out << serialize_sample(s) << "\n";
    }
    if (!out) throw_data("short write on dataset: " + path);
}

} // namespace prodemb
