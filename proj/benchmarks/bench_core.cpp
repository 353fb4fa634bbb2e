#include <benchmark/benchmark.h>

#include <random>

#include "prodemb/evalsuite.hpp"
#include "prodemb/ops.hpp"
#include "prodemb/synthetic.hpp"
#include "prodemb/trainer.hpp"

using namespace prodemb;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                     bool grad = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(r * c);
    for (double& x : v) x = dist(rng);
    return Tensor::from({r, c}, std::move(v), grad);
}

struct Fixture {
    SyntheticData data;
    TrainConfig cfg;
    Fixture() {
        GenConfig g;
        g.identities = 64;
        g.categories = 8;
        g.image_size = 32;
        g.train_per_identity = 2;
        data = generate_synthetic(g);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

} // namespace

static void BM_matmul_64(benchmark::State& state) {
    Tensor a = random_matrix(42, 64, 1);
    Tensor b = random_matrix(64, 64, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b).value().data());
    }
}
BENCHMARK(BM_matmul_64);

static void BM_softmax_rows(benchmark::State& state) {
    Tensor x = random_matrix(42, 42, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(masked_softmax_rows(x).value().data());
    }
}
BENCHMARK(BM_softmax_rows);

static void BM_encode_item(benchmark::State& state) {
    auto& f = fixture();
    ProductEncoder enc = make_encoder(f.cfg, f.data.train);
    const ProductSample& s = f.data.train[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            enc.encode(s.positive, Modality::ImageText, true).values.data());
    }
}
BENCHMARK(BM_encode_item);

static void BM_encode_backward_pair(benchmark::State& state) {
    auto& f = fixture();
    ProductEncoder enc = make_encoder(f.cfg, f.data.train);
    const ProductSample& s = f.data.train[0];
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<double>> nbuf(63, std::vector<double>(64));
    for (auto& n : nbuf) {
        for (double& v : n) v = dist(rng);
    }
    std::vector<std::span<const double>> negs(nbuf.begin(), nbuf.end());
    for (auto _ : state) {
        GradTape tape;
        TapeScope scope(tape);
        Tensor q = enc.encode_tensor(s.query, Modality::ImageOnly, false);
        Tensor p = enc.encode_tensor(s.positive, Modality::ImageText, true);
        Tensor loss = info_nce_loss(q, p, negs, 0.07);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.gradient(enc.parameters()[0]).data());
    }
}
BENCHMARK(BM_encode_backward_pair);

static void BM_train_step(benchmark::State& state) {
    auto& f = fixture();
    Trainer trainer(f.cfg, f.data.train);
    for (auto _ : state) {
        benchmark::DoNotOptimize(trainer.step().loss);
    }
}
BENCHMARK(BM_train_step)->Unit(benchmark::kMillisecond)->Iterations(5);

static void BM_recall_1000(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist(0.0, 1.0);
    EvalGallery g;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> e(64);
        for (double& v : e) v = dist(rng);
        g.items.push_back({"i" + std::to_string(10000 + i), std::move(e)});
    }
    for (int q = 0; q < 50; ++q) {
        std::vector<double> e(64);
        for (double& v : e) v = dist(rng);
        g.queries.push_back(
            {"q" + std::to_string(q), g.items[q * 3].id, std::move(e)});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(recall_at_k(g, {1, 5, 10}));
    }
}
BENCHMARK(BM_recall_1000);

BENCHMARK_MAIN();
