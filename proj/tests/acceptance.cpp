// Acceptance suite: one callable criterion per command-line id, all by
// default. Prints one [PASS]/[FAIL] line per criterion; exit code is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prodemb/checkpoint.hpp"
#include "prodemb/embedfile.hpp"
#include "prodemb/evalsuite.hpp"
#include "prodemb/loss.hpp"
#include "prodemb/ops.hpp"
#include "prodemb/optim.hpp"
#include "prodemb/pool.hpp"
#include "prodemb/synthetic.hpp"
#include "prodemb/trainer.hpp"

using namespace prodemb;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
    void note(const std::string& text) {
        if (pass) detail = text;
    }
};

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- C1: full-model gradient suite ------------------------------------

void c1_gradient_suite(Check& check) {
    const auto t0 = Clock::now();
    EncoderConfig cfg;
    cfg.model_dim = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.experts = 3;
    cfg.expert_hidden = 16;
    cfg.vocab_size = 32;
    cfg.image_resolution = 8;
    cfg.patch_size = 4; // M = 4
    cfg.max_text_len = 8;

    ProductSample proto;
    proto.query.title = "a red circle photo";
    proto.positive.title = "red circle";
    proto.positive.categories = {{"industry", "curved"}, {"level1", "circle"}};
    proto.positive.attributes = {{"color", "red"}, {"category", "circle"}};
    proto.hard_negative.title = "blue circle";
    Vocabulary vocab = Vocabulary::build({proto}, 32);

    ProductSide side = proto.positive;
    Image img(3, 8, 8);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& p : img.pixels) p = u(rng);
    side.image = img;
    side.bbox = Bbox{2, 2, 6, 6};

    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> n1(cfg.model_dim), n2(cfg.model_dim);
    for (double& v : n1) v = dist(rng);
    for (double& v : n2) v = dist(rng);
    std::vector<std::span<const double>> negs = {n1, n2};

    double worst = 0.0;
    for (GateMode gm : {GateMode::Literal, GateMode::Renormalized}) {
        cfg.gate_mode = gm;
        ProductEncoder enc(cfg, vocab, DetectorMode::File, 47);
        auto loss_fn = [&] {
            Tensor q = enc.encode_tensor(side, Modality::ImageText, true);
            Tensor p = enc.encode_tensor(side, Modality::TextOnly, true);
            return info_nce_loss(q, p, negs, 0.25);
        };
        worst = std::max(worst,
                         finite_diff_check(loss_fn, enc.parameters(), 1e-5));
    }
    const double secs = elapsed_s(t0);
    check.require(worst <= 1e-4, "max relative error " + std::to_string(worst));
    check.require(secs < 60.0, "took " + std::to_string(secs) + " s");
    std::ostringstream os;
    os << "max rel err " << worst << ", " << secs << " s";
    check.note(os.str());
}

// ---- C2: pool-count law ------------------------------------------------

void c2_pool_count_law(Check& check) {
    std::uint64_t checked = 0;
    for (std::size_t B : {1, 2, 4}) {
        for (std::size_t P : {1, 2, 4}) {
            for (std::size_t k : {0, 1, 3}) {
                NegativePool pool(B, P, k);
                for (std::uint64_t step = 0; step < 10; ++step) {
                    // unique ids per batch; embeddings encode provenance
                    std::vector<std::vector<PooledItem>> slices(P);
                    for (std::size_t w = 0; w < P; ++w) {
                        for (int role = 0; role < 2; ++role) {
                            for (std::size_t b = 0; b < B; ++b) {
                                PooledItem item;
                                item.worker = std::uint32_t(w);
                                item.batch_index = step;
                                item.sample_id =
                                    "q" + std::to_string(step) + "." +
                                    std::to_string(w) + "." +
                                    std::to_string(b);
                                item.role = role == 0
                                                ? ItemRole::Positive
                                                : ItemRole::HardNegative;
                                const double code =
                                    double(step * 1000 + w * 100 + b * 2 +
                                           std::size_t(role));
                                item.embedding = {code};
                                slices[w].push_back(std::move(item));
                            }
                        }
                    }
                    // interleave back to positives-then-negatives order
                    for (std::size_t w = 0; w < P; ++w) {
                        std::vector<PooledItem> ordered;
                        for (std::size_t b = 0; b < B; ++b)
                            ordered.push_back(slices[w][b]);
                        for (std::size_t b = 0; b < B; ++b)
                            ordered.push_back(slices[w][B + b]);
                        slices[w] = std::move(ordered);
                    }
                    pool.advance(slices);

                    const std::uint64_t kp =
                        std::min<std::uint64_t>(k, pool.batches_seen() - 1);
                    const std::size_t expect = 2 * B * P * (kp + 1) - 1;
                    for (std::size_t w = 0; w < P; ++w) {
                        for (std::size_t b = 0; b < B; ++b) {
                            const std::string qid =
                                "q" + std::to_string(step) + "." +
                                std::to_string(w) + "." + std::to_string(b);
                            auto negs = pool.assemble_negatives(qid);
                            check.require(
                                negs.size() == expect,
                                qid + ": " + std::to_string(negs.size()) +
                                    " negatives, expected " +
                                    std::to_string(expect));
                            const double own_pos =
                                double(step * 1000 + w * 100 + b * 2 + 0);
                            const double own_neg =
                                double(step * 1000 + w * 100 + b * 2 + 1);
                            bool saw_pos = false, saw_neg = false;
                            for (const auto& n : negs) {
                                if (n[0] == own_pos) saw_pos = true;
                                if (n[0] == own_neg) saw_neg = true;
                            }
                            check.require(!saw_pos,
                                          qid + ": own positive leaked in");
                            check.require(saw_neg,
                                          qid + ": own hard negative missing");
                            ++checked;
                            if (!check.pass) return;
                        }
                    }
                }
            }
        }
    }
    check.note(std::to_string(checked) + " queries checked, exact");
}

// ---- C3: guided-MoE routing --------------------------------------------

void c3_guided_moe(Check& check) {
    // identity experts, uniform gates, literal mode, N = 3
    const std::size_t dim = 6;
    std::vector<Segment> segs = {Segment::Title, Segment::Category,
                                 Segment::Attribute, Segment::Visual};
    std::vector<double> xv;
    for (std::size_t t = 0; t < segs.size(); ++t) {
        for (std::size_t d = 0; d < dim; ++d) {
            xv.push_back(0.37 * double(t + 1) - 0.11 * double(d));
        }
    }
    Tensor x = Tensor::from({segs.size(), dim}, xv);
    std::vector<Tensor> identity_outputs(3, x);
    Tensor gate = Tensor::full({segs.size(), 3}, 1.0 / 3.0);
    Tensor y = moe_combine(identity_outputs, gate, segs, RoutingMode::Guided);
    for (std::size_t d = 0; d < dim; ++d) {
        const double title = y.value()[0 * dim + d];
        const double cat = y.value()[1 * dim + d];
        const double attr = y.value()[2 * dim + d];
        const double vis = y.value()[3 * dim + d];
        check.require(std::abs(title - xv[0 * dim + d] / 3.0) < 1e-12,
                      "title token deviates from x/3");
        check.require(std::abs(vis - xv[3 * dim + d] / 3.0) < 1e-12,
                      "visual token deviates from x/3");
        check.require(std::abs(cat - 2.0 * xv[1 * dim + d] / 3.0) < 1e-12,
                      "category token deviates from 2x/3");
        check.require(std::abs(attr - 2.0 * xv[2 * dim + d] / 3.0) < 1e-12,
                      "attribute token deviates from 2x/3");
    }

    // E' gradients are exactly zero on a batch with no category tokens
    GenConfig g;
    g.identities = 8;
    g.categories = 4;
    g.image_size = 16;
    g.train_per_identity = 2;
    SyntheticData data = generate_synthetic(g);
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.batch_size = 2;
    cfg.workers = 1;
    cfg.pool_batches = 0;
    cfg.item_cat_attr = false;
    cfg.encoder.model_dim = 16;
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.experts = 3;
    cfg.encoder.expert_hidden = 16;
    cfg.encoder.vocab_size = 64;
    cfg.encoder.image_resolution = 16;
    cfg.encoder.patch_size = 8;
    Trainer trainer(cfg, data.train);
    trainer.force_modalities({Modality::ImageOnly});
    GradientCapture capture;
    trainer.step(&capture);
    const auto& enc = trainer.encoder();
    for (std::size_t expert : {cfg.encoder.experts - 2,
                               cfg.encoder.experts - 1}) {
        for (std::size_t idx : enc.expert_parameter_indices(0, expert)) {
            for (double gv : capture.grads[idx]) {
                check.require(gv == 0.0,
                              "specialist gradient not exactly zero");
            }
        }
    }
    check.note("routing arithmetic within 1e-12; specialist grads exact 0");
}

// ---- C4: InfoNCE oracle --------------------------------------------------

void c4_infonce_oracle(Check& check) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    std::uniform_real_distribution<double> tau_dist(0.05, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_negs = 1 + rng() % 32;
        std::vector<double> q = {1.0};
        std::vector<double> p = {sim(rng)};
        std::vector<std::vector<double>> nbuf(n_negs);
        for (auto& n : nbuf) n = {sim(rng)};
        std::vector<std::span<const double>> negs(nbuf.begin(), nbuf.end());
        LossConfig cfg;
        cfg.temperature = tau_dist(rng);
        double denom = std::exp(p[0] / cfg.temperature);
        for (const auto& n : nbuf) {
            denom += std::exp(n[0] / cfg.temperature);
        }
        const double brute =
            -std::log(std::exp(p[0] / cfg.temperature) / denom);
        worst = std::max(worst,
                         std::abs(info_nce(q, p, negs, cfg) - brute));
    }
    check.require(worst < 1e-12,
                  "worst brute-force gap " + std::to_string(worst));

    // uniform case: ln(1 + |S|)
    for (std::size_t s : {1, 3, 15, 255}) {
        std::vector<double> q = {0.3};
        std::vector<double> p = {0.7};
        std::vector<std::vector<double>> nbuf(s, p);
        std::vector<std::span<const double>> negs(nbuf.begin(), nbuf.end());
        LossConfig cfg;
        cfg.temperature = 0.07;
        const double loss = info_nce(q, p, negs, cfg);
        check.require(std::abs(loss - std::log(double(1 + s))) < 1e-12,
                      "uniform case misses ln(1+|S|) at |S|=" +
                          std::to_string(s));
    }
    std::ostringstream os;
    os << "1000 random instances, worst gap " << worst;
    check.note(os.str());
}

// ---- C5: retrieval oracle ------------------------------------------------

void c5_retrieval_oracle(Check& check) {
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t items = 5 + rng() % 996; // up to 1000
        const std::size_t dim = 16;
        EvalGallery g;
        for (std::size_t i = 0; i < items; ++i) {
            std::vector<double> e(dim);
            for (double& v : e) v = dist(rng);
            std::ostringstream id;
            id << "item-" << 100000 + i;
            g.items.push_back({id.str(), std::move(e)});
        }
        const std::size_t queries = 1 + rng() % 25;
        for (std::size_t q = 0; q < queries; ++q) {
            std::vector<double> e(dim);
            for (double& v : e) v = dist(rng);
            g.queries.push_back({"q" + std::to_string(q),
                                 g.items[rng() % items].id, std::move(e)});
        }
        std::vector<std::size_t> ks = {1, 5, 10, 100, items};
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

        // brute force: full similarity matrix + sort with the tie rule
        auto fast = recall_at_k(g, ks);
        std::map<std::size_t, double> brute;
        {
            std::vector<std::size_t> clamped = ks;
            for (auto& k : clamped) k = std::min(k, items);
            std::vector<std::size_t> ranks;
            for (const auto& q : g.queries) {
                std::vector<std::pair<double, std::string>> scored;
                for (const auto& item : g.items) {
                    scored.emplace_back(similarity(q.embedding,
                                                   item.embedding),
                                        item.id);
                }
                std::sort(scored.begin(), scored.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) {
                                  return a.first > b.first;
                              }
                              return a.second < b.second;
                          });
                for (std::size_t r = 0; r < scored.size(); ++r) {
                    if (scored[r].second == q.positive_id) {
                        ranks.push_back(r + 1);
                        break;
                    }
                }
            }
            for (std::size_t k : clamped) {
                std::size_t hits = 0;
                for (std::size_t r : ranks) {
                    if (r <= k) ++hits;
                }
                brute[k] = double(hits) / double(ranks.size());
            }
        }
        check.require(fast == brute,
                      "gallery " + std::to_string(items) +
                          ": mismatch with brute force");
        if (!check.pass) return;
    }
    check.note("50 random galleries, exact match");
}

// ---- C6: metric fixtures -------------------------------------------------

void c6_metric_fixtures(Check& check) {
    check.require(std::abs(f_beta(0.5, 1.0, 2.0) - 0.8333333333333334) < 1e-9,
                  "F2(P=0.5, R=1) misses 0.8333");
    check.require(f_beta(0.0, 0.0, 1.0) == 0.0, "0/0 must give 0");
    check.require(f_beta(0.0, 1.0, 1.0) == 0.0, "P=0 must give F=0");

    PrfReport a = prf_metrics({"A", "A", "B"}, {"A", "B", "B"}, 1.0);
    check.require(std::abs(a.accuracy - 2.0 / 3.0) < 1e-12, "accuracy");
    check.require(std::abs(a.precision_macro - 0.75) < 1e-12,
                  "macro precision");

    // all-wrong predictions drive every per-class count to 0/0 paths
    PrfReport z = prf_metrics({"A", "B"}, {"B", "A"}, 1.0);
    check.require(z.accuracy == 0.0 && z.precision_macro == 0.0 &&
                      z.recall_macro == 0.0 && z.f_macro == 0.0,
                  "0/0 fixture");

    PrfReport two = prf_metrics({"A", "B", "A", "B", "A"},
                                {"A", "A", "A", "A", "A"}, 2.0);
    check.require(std::abs(two.accuracy - 0.6) < 1e-12, "F2 fixture accuracy");
    check.require(std::abs(two.f_macro - 0.4411764705882353) < 1e-12,
                  "F2 fixture macro F");
    check.note("fixtures reproduced");
}

// ---- C7: learning demonstration -------------------------------------------

void c7_learning(Check& check) {
    GenConfig g;
    g.identities = 64;
    g.categories = 8;
    g.image_size = 32;
    g.train_per_identity = 4;
    g.seed = 5;
    SyntheticData data = generate_synthetic(g);

    // random-model baseline over 20 seeds
    double baseline = 0.0;
    for (int s = 0; s < 20; ++s) {
        TrainConfig c;
        c.seed = 1000 + s;
        ProductEncoder enc = make_encoder(c, data.train);
        baseline += run_retrieval(enc, data.eval, RetrievalTask::ItemBased,
                                  {1})
                        .recall.at(1);
    }
    baseline /= 20.0;

    TrainConfig cfg; // desk-scale defaults: 2000 steps, B=8, P=4, k=3
    cfg.seed = 17;
    const auto t0 = Clock::now();
    Trainer trainer(cfg, data.train);
    for (std::uint64_t i = 0; i < cfg.steps; ++i) trainer.step();
    const double train_secs = elapsed_s(t0);

    auto rec = run_retrieval(trainer.encoder(), data.eval,
                             RetrievalTask::ItemBased, {1, 5, 10});
    auto cls = classify(trainer.encoder(), data.eval, "leaf", 10);
    auto attrs = predict_attributes(trainer.encoder(), data.eval);
    const double color_acc = attrs.per_key.at("color").accuracy;
    const double r1 = rec.recall.at(1);

    check.require(train_secs < 1800.0,
                  "training took " + std::to_string(train_secs) + " s");
    check.require(r1 >= 5.0 * baseline,
                  "R@1 " + std::to_string(r1) + " < 5 x baseline " +
                      std::to_string(baseline));
    check.require(cls.accuracy_topn >= 0.9,
                  "top-10 classification accuracy " +
                      std::to_string(cls.accuracy_topn));
    check.require(color_acc >= 0.9,
                  "color attribute accuracy " + std::to_string(color_acc));
    std::ostringstream os;
    os << "R@1 " << r1 << " vs baseline " << baseline << " (x"
       << (baseline > 0 ? r1 / baseline : 0.0) << "), cls@10 "
       << cls.accuracy_topn << ", color " << color_acc << ", "
       << train_secs / 60.0 << " min";
    check.note(os.str());
}

// ---- C8: ablation direction check ------------------------------------------

void c8_ablations(Check& check) {
    GenConfig g;
    g.identities = 32;
    g.categories = 8;
    g.image_size = 32;
    g.noise = 0.35;
    g.train_per_identity = 4;
    g.seed = 11;
    SyntheticData data = generate_synthetic(g);

    auto base_cfg = [] {
        TrainConfig c;
        c.steps = 400;
        c.batch_size = 4;
        c.workers = 2;
        c.pool_batches = 3;
        c.peak_lr = 1e-3;
        c.encoder.model_dim = 32;
        c.encoder.layers = 2;
        c.encoder.heads = 4;
        c.encoder.experts = 4;
        c.encoder.expert_hidden = 64;
        c.encoder.vocab_size = 128;
        c.encoder.image_resolution = 32;
        c.encoder.patch_size = 8;
        return c;
    };

    auto mean_r1 = [&](const std::function<void(TrainConfig&)>& tweak) {
        double sum = 0.0;
        for (int s = 0; s < 5; ++s) {
            TrainConfig c = base_cfg();
            c.seed = 201 + s;
            tweak(c);
            Trainer t(c, data.train);
            for (std::uint64_t i = 0; i < c.steps; ++i) t.step();
            sum += run_retrieval(t.encoder(), data.eval,
                                 RetrievalTask::ItemBased, {1})
                       .recall.at(1);
        }
        return sum / 5.0;
    };

    const double full = mean_r1([](TrainConfig&) {});
    const double no_crop =
        mean_r1([](TrainConfig& c) { c.detector = DetectorMode::Disabled; });
    const double no_guide = mean_r1(
        [](TrainConfig& c) { c.encoder.routing = RoutingMode::Generic; });
    const double no_pool =
        mean_r1([](TrainConfig& c) { c.pool_batches = 0; });

    check.require(full >= no_crop, "full " + std::to_string(full) +
                                       " < no-crop " +
                                       std::to_string(no_crop));
    check.require(full >= no_guide, "full " + std::to_string(full) +
                                        " < generic routing " +
                                        std::to_string(no_guide));
    check.require(full >= no_pool, "full " + std::to_string(full) +
                                       " < k=0 pool " +
                                       std::to_string(no_pool));
    std::ostringstream os;
    os << "R@1 means over 5 seeds: full " << full << ", no-crop " << no_crop
       << ", generic " << no_guide << ", k=0 " << no_pool;
    check.note(os.str());
}

// ---- C9: determinism and persistence ----------------------------------------

void c9_determinism(Check& check) {
    GenConfig g;
    g.identities = 8;
    g.categories = 4;
    g.image_size = 16;
    g.train_per_identity = 2;
    SyntheticData data = generate_synthetic(g);

    TrainConfig cfg;
    cfg.steps = 10;
    cfg.batch_size = 2;
    cfg.workers = 2;
    cfg.pool_batches = 1;
    cfg.seed = 77;
    cfg.encoder.model_dim = 16;
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.experts = 3;
    cfg.encoder.expert_hidden = 16;
    cfg.encoder.vocab_size = 64;
    cfg.encoder.image_resolution = 16;
    cfg.encoder.patch_size = 8;

    std::vector<double> run1, run2;
    {
        Trainer t(cfg, data.train);
        for (int i = 0; i < 10; ++i) run1.push_back(t.step().loss);
    }
    Trainer t(cfg, data.train);
    for (int i = 0; i < 10; ++i) run2.push_back(t.step().loss);
    check.require(run1 == run2, "loss trajectories differ bitwise");

    // checkpoint round trip: bytes and encode()
    namespace fs = std::filesystem;
    const std::string dir = "./acceptance_tmp";
    fs::create_directories(dir);
    save_checkpoint(t.encoder(), dir + "/a.ckpt");
    ProductEncoder loaded = load_checkpoint(dir + "/a.ckpt");
    save_checkpoint(loaded, dir + "/b.ckpt");
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };
    check.require(slurp(dir + "/a.ckpt") == slurp(dir + "/b.ckpt"),
                  "checkpoint bytes changed across save/load/save");
    Embedding before =
        t.encoder().encode(data.eval[0].positive, Modality::ImageText, true);
    Embedding after =
        loaded.encode(data.eval[0].positive, Modality::ImageText, true);
    check.require(before.values == after.values,
                  "encode() differs after checkpoint round trip");

    // embed subcommand byte stability through the real binary
    save_jsonl(data.eval, dir + "/eval.jsonl");
    const std::string base = std::string(PRODEMB_BINARY) + " embed --ckpt " +
                             dir + "/a.ckpt --data " + dir + "/eval.jsonl";
    int rc1 = std::system(
        (base + " --out " + dir + "/e1.bin > /dev/null").c_str());
    int rc2 = std::system(
        (base + " --out " + dir + "/e2.bin > /dev/null").c_str());
    check.require(WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0,
                  "embed subcommand failed");
    const std::string e1 = slurp(dir + "/e1.bin");
    check.require(!e1.empty() && e1 == slurp(dir + "/e2.bin"),
                  "embed output not byte-stable");
    fs::remove_all(dir);
    check.note("bitwise trajectories, exact round trips, stable embed");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Check&)> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "gradient suite (finite differences, tiny config)",
         c1_gradient_suite},
        {2, "pool-count law (exhaustive simulation)", c2_pool_count_law},
        {3, "guided-MoE routing and gradient isolation", c3_guided_moe},
        {4, "InfoNCE brute-force oracle", c4_infonce_oracle},
        {5, "retrieval brute-force oracle", c5_retrieval_oracle},
        {6, "metric fixtures", c6_metric_fixtures},
        {7, "learning demonstration (2000 steps, defaults)", c7_learning},
        {8, "ablation direction check (5 seeds)", c8_ablations},
        {9, "determinism and persistence", c9_determinism},
    };

    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!wanted.empty() &&
            std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
            continue;
        }
        Check check;
        const auto t0 = Clock::now();
        try {
            c.run(check);
        } catch (const std::exception& e) {
            check.pass = false;
            check.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] C%d %s: %s (%.1f s)\n",
                    check.pass ? "PASS" : "FAIL", c.id, c.title,
                    check.detail.c_str(), elapsed_s(t0));
        std::fflush(stdout);
        if (!check.pass) ++failures;
    }
    return failures;
}
