#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "prodemb/candidates.hpp"
#include "prodemb/kvconfig.hpp"
#include "prodemb/sample.hpp"
#include "prodemb/synthetic.hpp"
#include "prodemb/tokenizer.hpp"
#include "prodemb/vision.hpp"

using namespace prodemb;
using json = nlohmann::ordered_json;

namespace {

json tiny_image_json(std::size_t h, std::size_t w, double fill = 0.25) {
    json channels = json::array();
    for (int c = 0; c < 3; ++c) {
        json rows = json::array();
        for (std::size_t y = 0; y < h; ++y) {
            json row = json::array();
            for (std::size_t x = 0; x < w; ++x) row.push_back(fill);
            rows.push_back(row);
        }
        channels.push_back(rows);
    }
    return channels;
}

json base_record() {
    json j;
    j["sample_id"] = "s-1";
    j["query_title"] = "red cup";
    j["query_image"] = tiny_image_json(4, 4);
    j["query_bbox"] = "(1,1,3,3)";
    j["pos_title"] = "red cup";
    j["pos_categories"] = json::array(
        {json::array({"industry", "kitchen"}), json::array({"level1", "cup"})});
    j["pos_attributes"] = {{"color", "red"}};
    j["neg_title"] = "blue cup";
    return j;
}

ProductSample mini_sample(const std::string& id, const std::string& leaf,
                          const std::string& color) {
    ProductSample s;
    s.sample_id = id;
    s.query.title = "a " + color + " " + leaf;
    s.positive.title = color + " " + leaf;
    s.positive.categories = {{"industry", "things"}, {"level1", leaf}};
    if (!color.empty()) s.positive.attributes["color"] = color;
    s.hard_negative.title = "other " + leaf;
    return s;
}

} // namespace

TEST_CASE("parse_sample reads the MBE-format record") {
    ProductSample s = parse_sample(base_record().dump());
    CHECK(s.sample_id == "s-1");
    CHECK(s.query.title == "red cup");
    REQUIRE(s.query.bbox.has_value());
    CHECK(*s.query.bbox == Bbox{1, 1, 3, 3});
    REQUIRE(s.query.image.has_value());
    CHECK(s.query.image->height == 4);
    CHECK(s.positive.categories.size() == 2);
    CHECK(s.positive.leaf_category() == "cup");
    CHECK(s.positive.attributes.at("color") == "red");
    CHECK(s.hard_negative.title == "blue cup");
}

TEST_CASE("parse_sample defaults optional fields") {
    json j = base_record();
    j.erase("pos_attributes");
    j.erase("query_bbox");
    j.erase("query_image");
    ProductSample s = parse_sample(j.dump());
    CHECK(s.positive.attributes.empty());
    CHECK_FALSE(s.query.bbox.has_value());
    CHECK_FALSE(s.query.image.has_value());
}

TEST_CASE("parse_sample rejects bad records") {
    SUBCASE("degenerate bbox") {
        json j = base_record();
        j["query_bbox"] = "(3,3,1,1)";
        CHECK_THROWS_WITH_AS(parse_sample(j.dump()),
                             doctest::Contains("bbox-degenerate"), Error);
    }
    SUBCASE("bbox outside image bounds") {
        json j = base_record();
        j["query_bbox"] = "(0,0,5,5)";
        CHECK_THROWS_WITH_AS(parse_sample(j.dump()),
                             doctest::Contains("bbox-out-of-bounds"), Error);
    }
    SUBCASE("missing mandatory title") {
        json j = base_record();
        j.erase("pos_title");
        CHECK_THROWS_WITH_AS(parse_sample(j.dump()),
                             doctest::Contains("pos_title"), Error);
    }
    SUBCASE("malformed JSON") {
        CHECK_THROWS_WITH_AS(parse_sample("{not json"),
                             doctest::Contains("malformed JSON"), Error);
    }
    SUBCASE("pixels outside [0,1]") {
        json j = base_record();
        j["query_image"][0][0][0] = 1.5;
        CHECK_THROWS_WITH_AS(parse_sample(j.dump()),
                             doctest::Contains("image-pixel-range"), Error);
    }
}

TEST_CASE("parse warnings for non-canonical attribute keys") {
    json j = base_record();
    j["pos_attributes"]["weirdness"] = "high";
    std::vector<std::string> warnings;
    parse_sample(j.dump(), "", &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("weirdness") != std::string::npos);
}

TEST_CASE("tokenize splits title and layers category/attribute runs") {
    std::vector<ProductSample> corpus = {mini_sample("a", "cup", "red")};
    corpus[0].positive.categories = {{"industry", "kitchen"},
                                     {"level1", "cup"}};
    Vocabulary vocab = Vocabulary::build(corpus, 64);

    SUBCASE("flag off keeps only the title") {
        TokenSequence seq = tokenize(corpus[0].positive, false, vocab);
        CHECK(seq.length() == 2);
        CHECK(seq.segments[0] == Segment::Title);
        CHECK(seq.segments[1] == Segment::Title);
        CHECK(seq.ids[0] != Vocabulary::kUnkId);
        CHECK(seq.ids[0] != seq.ids[1]);
    }

    SUBCASE("flag on appends category then attribute tokens") {
        TokenSequence seq = tokenize(corpus[0].positive, true, vocab);
        // [red, cup][kitchen, cup][color, :, red]
        REQUIRE(seq.length() == 7);
        const std::vector<Segment> expect = {
            Segment::Title,     Segment::Title,    Segment::Category,
            Segment::Category,  Segment::Attribute, Segment::Attribute,
            Segment::Attribute};
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(seq.segments[i] == expect[i]);
        }
    }

    SUBCASE("empty title yields the empty sequence") {
        ProductSide side;
        side.title = "";
        TokenSequence seq = tokenize(side, false, vocab);
        CHECK(seq.length() == 0);
    }

    SUBCASE("out-of-vocabulary words map to UNK") {
        ProductSide side;
        side.title = "flabbergasting cup";
        TokenSequence seq = tokenize(side, false, vocab);
        CHECK(seq.ids[0] == Vocabulary::kUnkId);
        CHECK(seq.ids[1] != Vocabulary::kUnkId);
    }
}

TEST_CASE("segment runs appear in fixed order") {
    GenConfig cfg;
    cfg.identities = 8;
    cfg.categories = 4;
    cfg.image_size = 16;
    cfg.train_per_identity = 2;
    SyntheticData data = generate_synthetic(cfg);
    Vocabulary vocab = Vocabulary::build(data.train, 128);
    for (const ProductSample& s : data.train) {
        TokenSequence seq = tokenize(s.positive, true, vocab);
        int phase = 0; // 0 title, 1 category, 2 attribute
        for (Segment seg : seq.segments) {
            const int want = seg == Segment::Title      ? 0
                             : seg == Segment::Category ? 1
                                                        : 2;
            CHECK(want >= phase);
            phase = want;
        }
    }
}

TEST_CASE("generator is deterministic and self-consistent") {
    GenConfig cfg;
    cfg.identities = 8;
    cfg.categories = 4;
    cfg.image_size = 16;
    cfg.train_per_identity = 2;
    cfg.eval_per_identity = 1;
    cfg.seed = 42;

    SyntheticData a = generate_synthetic(cfg);
    SyntheticData b = generate_synthetic(cfg);
    REQUIRE(a.train.size() == 16);
    REQUIRE(a.eval.size() == 8);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(serialize_sample(a.train[i]) == serialize_sample(b.train[i]));
    }

    SUBCASE("oracle detector returns the recorded bbox exactly") {
        for (const ProductSample& s : a.train) {
            REQUIRE(s.query.image.has_value());
            REQUIRE(s.query.bbox.has_value());
            CoreRegion r =
                detect_core(*s.query.image, s.query, DetectorMode::Oracle);
            CHECK(r.bbox == *s.query.bbox);
            CHECK(r.source == RegionSource::Oracle);
        }
    }

    SUBCASE("hard negative shares the leaf category, differs in identity") {
        for (const ProductSample& s : a.train) {
            const auto pos_words = split_words(s.positive.title);
            const auto neg_words = split_words(s.hard_negative.title);
            REQUIRE(pos_words.size() == 2);
            REQUIRE(neg_words.size() == 2);
            CHECK(neg_words[1] == s.positive.leaf_category());
            CHECK(neg_words[0] != pos_words[0]);
        }
    }

    SUBCASE("splits are disjoint in sample ids") {
        for (const ProductSample& t : a.train) {
            for (const ProductSample& e : a.eval) {
                CHECK(t.sample_id != e.sample_id);
            }
        }
    }

    SUBCASE("round trip through serialization is the identity") {
        for (const ProductSample& s : a.eval) {
            const std::string line = serialize_sample(s);
            ProductSample back = parse_sample(line);
            CHECK(back == s);
            CHECK(serialize_sample(back) == line);
        }
    }
}

TEST_CASE("generator refuses single-identity categories") {
    GenConfig cfg;
    cfg.identities = 4;
    cfg.categories = 4;
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg),
                         doctest::Contains("no-hard-negative"), Error);
}

TEST_CASE("candidate sets deduplicate and key by attribute") {
    std::vector<ProductSample> corpus = {mini_sample("a", "cup", "red"),
                                         mini_sample("b", "cup", "blue"),
                                         mini_sample("c", "vase", "red")};
    CandidateSets sets = build_candidate_sets(corpus, "level1");
    CHECK(sets.categories == std::vector<std::string>{"cup", "vase"});
    CHECK(sets.attribute_values.at("color") ==
          std::vector<std::string>{"blue", "red"});
    CHECK(sets.attribute_values.count("material") == 0);

    SUBCASE("leaf alias picks the deepest level") {
        CandidateSets leaf = build_candidate_sets(corpus, "leaf");
        CHECK(leaf.categories == sets.categories);
    }

    SUBCASE("missing level is an error") {
        CHECK_THROWS_AS(build_candidate_sets(corpus, "level4"), Error);
    }

    SUBCASE("output is independent of corpus order") {
        std::vector<ProductSample> shuffled = corpus;
        std::mt19937_64 rng(3);
        for (int i = 0; i < 5; ++i) {
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            CandidateSets again = build_candidate_sets(shuffled, "level1");
            CHECK(again.categories == sets.categories);
            CHECK(again.attribute_values == sets.attribute_values);
        }
    }
}

TEST_CASE("kv config parses and rejects unknown keys") {
    KvConfig kv = KvConfig::parse_string(
        "# comment\nidentities = 8\nnoise=0.5\n\nseed=7\n");
    CHECK(kv.get_uint("identities", 0) == 8);
    CHECK(kv.get_double("noise", 0.0) == 0.5);
    CHECK(kv.get_uint("seed", 0) == 7);
    kv.reject_unknown();

    KvConfig bad = KvConfig::parse_string("identities=8\nbogus=1\n");
    bad.get_uint("identities", 0);
    CHECK_THROWS_WITH_AS(bad.reject_unknown(), doctest::Contains("bogus"),
                         Error);
    CHECK_THROWS_AS(KvConfig::parse_string("no equals sign"), Error);
}

TEST_CASE("jsonl files round trip including raw image paths") {
    GenConfig cfg;
    cfg.identities = 4;
    cfg.categories = 2;
    cfg.image_size = 12;
    cfg.train_per_identity = 1;
    SyntheticData data = generate_synthetic(cfg);

    const std::string dir = "./datamodel_test_tmp";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/corpus.jsonl";
    save_jsonl(data.train, path);
    std::vector<ProductSample> loaded = load_jsonl(path);
    REQUIRE(loaded.size() == data.train.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i] == data.train[i]);
    }

    // image as a relative raw-tensor path
    save_raw_image(*data.train[0].query.image, dir + "/img.bin");
    json j = base_record();
    j["query_image"] = "img.bin";
    j.erase("query_bbox");
    {
        std::ofstream out(dir + "/byref.jsonl");
        out << j.dump() << "\n";
    }
    std::vector<ProductSample> byref = load_jsonl(dir + "/byref.jsonl");
    REQUIRE(byref.size() == 1);
    REQUIRE(byref[0].query.image.has_value());
    CHECK(byref[0].query.image->width == data.train[0].query.image->width);
    CHECK(byref[0].query.image->pixels == data.train[0].query.image->pixels);
    std::filesystem::remove_all(dir);
}
