#include "prodemb/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace prodemb {

namespace {

struct Rgb {
    double r, g, b;
};

const std::vector<std::string> kShapes = {"circle",  "square", "triangle",
                                          "diamond", "ring",   "cross",
                                          "hexagon", "frame"};
const std::vector<std::string> kColors = {"red",    "green",  "blue",
                                          "yellow", "purple", "orange",
                                          "cyan",   "magenta"};
const std::array<Rgb, 8> kPalette = {{{0.90, 0.10, 0.10},
                                      {0.10, 0.80, 0.15},
                                      {0.15, 0.20, 0.90},
                                      {0.90, 0.85, 0.10},
                                      {0.55, 0.15, 0.75},
                                      {0.95, 0.55, 0.10},
                                      {0.10, 0.80, 0.85},
                                      {0.90, 0.15, 0.70}}};

// Coarse level above the shape leaf.
std::string shape_group(std::size_t shape_idx) {
    const std::string& s = kShapes[shape_idx];
    if (s == "circle" || s == "ring" || s == "hexagon") return "curved";
    return "angular";
}

const std::vector<std::string> kQueryTemplates = {
    "% $",          "a % $",         "photo of a % $",
    "picture of % $", "the % $ item", "$ in %"};

std::string render_title(const std::string& tpl, const std::string& color,
                         const std::string& shape) {
    std::string out;
    for (char c : tpl) {
        if (c == '%') out += color;
        else if (c == '$') out += shape;
        else out += c;
    }
    return out;
}

bool inside_shape(std::size_t shape_idx, double dx, double dy, double rad) {
    switch (shape_idx) {
        case 0: // circle
            return dx * dx + dy * dy <= rad * rad;
        case 1: // square
            return std::max(std::abs(dx), std::abs(dy)) <= rad * 0.9;
        case 2: // triangle, wide at the bottom
            return dy >= -rad && dy <= rad &&
                   std::abs(dx) <= (dy + rad) * 0.5;
        case 3: // diamond
            return std::abs(dx) + std::abs(dy) <= rad;
        case 4: { // ring
            const double d2 = dx * dx + dy * dy;
            return d2 <= rad * rad && d2 >= (0.55 * rad) * (0.55 * rad);
        }
        case 5: // cross
            return (std::abs(dx) <= rad * 0.33 || std::abs(dy) <= rad * 0.33) &&
                   std::max(std::abs(dx), std::abs(dy)) <= rad;
        case 6: // hexagon
            return std::abs(dx) <= rad * 0.9 && std::abs(dy) <= rad * 0.8 &&
                   std::abs(dx) * 0.5 + std::abs(dy) * 0.866 <= rad * 0.9;
        case 7: { // frame
            const double m = std::max(std::abs(dx), std::abs(dy));
            return m <= rad * 0.9 && m >= rad * 0.5;
        }
        default:
            return false;
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt,
                       std::uint64_t index) {
    // splitmix64 over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1) + index;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Rendering {
    Image image;
    Bbox bbox;
};

Rendering render(std::size_t shape_idx, const Rgb& color, double brightness,
                 std::size_t size, double noise, double cx, double cy,
                 double rad, std::mt19937_64& rng) {
    Image img(3, size, size);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double& p : img.pixels) p = noise * u01(rng);
    const double rgb[3] = {std::clamp(color.r * brightness, 0.0, 1.0),
                           std::clamp(color.g * brightness, 0.0, 1.0),
                           std::clamp(color.b * brightness, 0.0, 1.0)};
    std::int64_t min_x = -1, max_x = -1, min_y = -1, max_y = -1;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double dx = (double(x) + 0.5) - cx;
            const double dy = (double(y) + 0.5) - cy;
            if (!inside_shape(shape_idx, dx, dy, rad)) continue;
            for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = rgb[c];
            if (min_x < 0 || std::int64_t(x) < min_x) min_x = std::int64_t(x);
            if (std::int64_t(x) > max_x) max_x = std::int64_t(x);
            if (min_y < 0 || std::int64_t(y) < min_y) min_y = std::int64_t(y);
            if (std::int64_t(y) > max_y) max_y = std::int64_t(y);
        }
    }
    if (min_x < 0) {
        // Degenerate radius painted nothing; fall back to the center pixel.
        const std::size_t px = size / 2, py = size / 2;
        for (std::size_t c = 0; c < 3; ++c) img.at(c, py, px) = rgb[c];
        min_x = max_x = std::int64_t(px);
        min_y = max_y = std::int64_t(py);
    }
    return Rendering{std::move(img), Bbox{min_x, min_y, max_x + 1, max_y + 1}};
}

std::string pad_index(std::size_t i) {
    std::string s = std::to_string(i);
    while (s.size() < 6) s.insert(s.begin(), '0');
    return s;
}

} // namespace

const std::vector<std::string>& synthetic_shape_names() { return kShapes; }
const std::vector<std::string>& synthetic_color_names() { return kColors; }

GenConfig GenConfig::from_kv(const KvConfig& kv) {
    GenConfig c;
    c.identities = kv.get_uint("identities", c.identities);
    c.categories = kv.get_uint("categories", c.categories);
    c.image_size = kv.get_uint("image_size", c.image_size);
    c.noise = kv.get_double("noise", c.noise);
    c.seed = kv.get_uint("seed", c.seed);
    c.train_per_identity =
        kv.get_uint("train_per_identity", c.train_per_identity);
    c.eval_per_identity = kv.get_uint("eval_per_identity", c.eval_per_identity);
    kv.reject_unknown();
    c.validate();
    return c;
}

void GenConfig::validate() const {
    if (categories == 0 || categories > kShapes.size()) {
        throw_config("categories must be in [1, " +
                     std::to_string(kShapes.size()) + "]");
    }
    if (identities == 0) throw_config("identities must be positive");
    const std::size_t per_cat = (identities + categories - 1) / categories;
    if (per_cat > kColors.size()) {
        throw_config("at most " + std::to_string(kColors.size()) +
                     " identities per category are distinguishable");
    }
    if (image_size < 8) throw_config("image_size must be at least 8");
    if (noise < 0.0 || noise > 1.0) throw_config("noise must be in [0, 1]");
    if (train_per_identity == 0) {
        throw_config("train_per_identity must be positive");
    }
}

SyntheticData generate_synthetic(const GenConfig& config) {
    config.validate();
    const std::size_t n = config.identities;

    // identity -> category (round robin) and color (distinct per category)
    std::vector<std::size_t> id_shape(n), id_color(n);
    std::vector<std::vector<std::size_t>> by_category(config.categories);
    for (std::size_t i = 0; i < n; ++i) {
        id_shape[i] = i % config.categories;
        id_color[i] = i / config.categories;
        by_category[id_shape[i]].push_back(i);
    }
    for (std::size_t c = 0; c < config.categories; ++c) {
        if (by_category[c].size() < 2) {
            throw_config("no-hard-negative: category '" + kShapes[c] +
                         "' has fewer than 2 identities");
        }
    }

    const double base_rad = 0.30 * double(config.image_size);
    const double half = 0.5 * double(config.image_size);

    auto canonical = [&](std::size_t identity) {
        std::mt19937_64 rng(mix_seed(config.seed, 1, identity));
        return render(id_shape[identity], kPalette[id_color[identity]], 1.0,
                      config.image_size, config.noise, half, half, base_rad,
                      rng);
    };

    auto make_sample = [&](std::size_t identity, std::uint64_t salt,
                           std::size_t index, const std::string& prefix) {
        std::mt19937_64 rng(mix_seed(config.seed, salt, index));
        std::uniform_real_distribution<double> shift(-0.15, 0.15);
        std::uniform_real_distribution<double> radj(0.85, 1.15);
        std::uniform_real_distribution<double> bright(0.9, 1.1);

        const std::size_t shape = id_shape[identity];
        const std::string& shape_name = kShapes[shape];
        const std::string& color_name = kColors[id_color[identity]];

        double rad = base_rad * radj(rng);
        const double lo = rad + 1.0;
        const double hi = double(config.image_size) - rad - 1.0;
        double cx = std::clamp(half + shift(rng) * double(config.image_size),
                               lo, hi);
        double cy = std::clamp(half + shift(rng) * double(config.image_size),
                               lo, hi);
        Rendering q = render(shape, kPalette[id_color[identity]], bright(rng),
                             config.image_size, config.noise, cx, cy, rad,
                             rng);
        const std::size_t tpl = rng() % kQueryTemplates.size();

        ProductSample s;
        s.sample_id = prefix + "-" + pad_index(index);
        s.query.title =
            render_title(kQueryTemplates[tpl], color_name, shape_name);
        s.query.image = std::move(q.image);
        s.query.bbox = q.bbox;

        Rendering p = canonical(identity);
        s.positive.title = color_name + " " + shape_name;
        s.positive.image = std::move(p.image);
        s.positive.categories = {{"industry", shape_group(shape)},
                                 {"level1", shape_name}};
        s.positive.attributes = {{"color", color_name},
                                 {"category", shape_name}};

        const auto& peers = by_category[shape];
        std::size_t pick = peers[rng() % peers.size()];
        while (pick == identity) pick = peers[rng() % peers.size()];
        Rendering hn = canonical(pick);
        s.hard_negative.title =
            kColors[id_color[pick]] + " " + kShapes[id_shape[pick]];
        s.hard_negative.image = std::move(hn.image);
        return s;
    };

    SyntheticData data;
    std::size_t index = 0;
    for (std::size_t identity = 0; identity < n; ++identity) {
        for (std::size_t r = 0; r < config.train_per_identity; ++r) {
            data.train.push_back(make_sample(identity, 2, index, "train"));
            ++index;
        }
    }
    index = 0;
    for (std::size_t identity = 0; identity < n; ++identity) {
        for (std::size_t r = 0; r < config.eval_per_identity; ++r) {
            data.eval.push_back(make_sample(identity, 3, index, "eval"));
            ++index;
        }
    }
    return data;
}

} // namespace prodemb
