#include <cmath>
#include <random>

#include "doctest.h"
#include "prodemb/ops.hpp"
#include "prodemb/optim.hpp"
#include "prodemb/tensor.hpp"

using namespace prodemb;

namespace {
double at(const Tensor& t, std::size_t i) { return t.value()[i]; }
}

TEST_CASE("softmax basic values") {
    Tensor s = softmax(Tensor::vector({0.0, 0.0}));
    CHECK(at(s, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(at(s, 1) == doctest::Approx(0.5).epsilon(1e-12));

    // shift invariance forces no overflow
    Tensor big = softmax(Tensor::vector({1000.0, 1000.0}));
    CHECK(at(big, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(big.all_finite());

    Tensor v = softmax(Tensor::vector(
        {std::log(6.0), std::log(2.0), std::log(1.0), std::log(1.0)}));
    CHECK(std::abs(at(v, 0) - 0.6) < 1e-12);
    CHECK(std::abs(at(v, 1) - 0.2) < 1e-12);
    CHECK(std::abs(at(v, 2) - 0.1) < 1e-12);
    CHECK(std::abs(at(v, 3) - 0.1) < 1e-12);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 8;
        std::vector<double> x(n);
        for (auto& xi : x) xi = dist(rng);
        const double shift = dist(rng);
        std::vector<double> xs(x);
        for (auto& xi : xs) xi += shift;
        Tensor a = softmax(Tensor::vector(x));
        Tensor b = softmax(Tensor::vector(xs));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += at(a, i);
            CHECK(at(a, i) >= 0.0);
            CHECK(std::abs(at(a, i) - at(b, i)) < 1e-12);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax rejects empty input") {
    CHECK_THROWS_WITH_AS(softmax(Tensor::vector({})),
                         doctest::Contains("empty-vector"), Error);
}

TEST_CASE("layer_norm examples") {
    Tensor g1 = Tensor::vector({1.0, 1.0});
    Tensor b0 = Tensor::vector({0.0, 0.0});

    Tensor a = layer_norm(Tensor::vector({1.0, -1.0}), g1, b0, 1e-12);
    CHECK(at(a, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(at(a, 1) == doctest::Approx(-1.0).epsilon(1e-9));

    // constant input: the eps guard keeps the output finite and zero
    Tensor c = layer_norm(Tensor::vector({5.0, 5.0}), g1, b0, 1e-5);
    CHECK(at(c, 0) == 0.0);
    CHECK(at(c, 1) == 0.0);

    Tensor d = layer_norm(Tensor::vector({2.0, 4.0}),
                          Tensor::vector({2.0, 2.0}),
                          Tensor::vector({1.0, 1.0}), 1e-12);
    CHECK(at(d, 0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(at(d, 1) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("layer_norm normalizes random rows") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist(3.0, 10.0);
    const std::size_t cols = 16;
    std::vector<double> x(cols);
    for (auto& v : x) v = dist(rng);
    Tensor y = layer_norm(Tensor::vector(x), Tensor::full({cols}, 1.0),
                          Tensor::zeros({cols}), 1e-12);
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < cols; ++i) mean += at(y, i);
    mean /= cols;
    for (std::size_t i = 0; i < cols; ++i) {
        var += (at(y, i) - mean) * (at(y, i) - mean);
    }
    var /= cols;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("layer_norm rejects length mismatch") {
    CHECK_THROWS_AS(layer_norm(Tensor::vector({1.0, 2.0}),
                               Tensor::vector({1.0}),
                               Tensor::vector({0.0, 0.0}), 1e-6),
                    Error);
}

TEST_CASE("affine examples") {
    Tensor x = Tensor::from({1, 2}, {1.0, 0.0});
    Tensor eye = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor out = affine(x, eye, Tensor::zeros({2}));
    CHECK(at(out, 0) == 1.0);
    CHECK(at(out, 1) == 0.0);

    Tensor s = affine(Tensor::from({1, 2}, {1.0, 2.0}),
                      Tensor::from({2, 1}, {1.0, 1.0}),
                      Tensor::vector({3.0}));
    CHECK(at(s, 0) == 6.0);

    Tensor z = affine(Tensor::from({1, 2}, {0.0, 0.0}),
                      Tensor::from({2, 1}, {4.0, -2.0}),
                      Tensor::vector({7.0}));
    CHECK(at(z, 0) == 7.0);

    CHECK_THROWS_AS(matmul(Tensor::zeros({1, 3}), Tensor::zeros({2, 1})),
                    Error);
}

TEST_CASE("backward of x^2 at x=3") {
    GradTape tape;
    Tensor x = Tensor::scalar(3.0, true);
    {
        TapeScope scope(tape);
        Tensor loss = mul(x, x);
        tape.backward(loss);
    }
    CHECK(tape.gradient(x)[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("backward through softmax component") {
    GradTape tape;
    Tensor v = Tensor::vector({0.0, 0.0});
    v.set_requires_grad(true);
    {
        TapeScope scope(tape);
        Tensor loss = pick(softmax(v), 0);
        tape.backward(loss);
    }
    auto g = tape.gradient(v);
    CHECK(std::abs(g[0] - 0.25) < 1e-12);
    CHECK(std::abs(g[1] + 0.25) < 1e-12);
}

TEST_CASE("parameters off the loss path get zero gradient") {
    GradTape tape;
    Tensor x = Tensor::scalar(2.0, true);
    Tensor unused = Tensor::vector({1.0, 2.0, 3.0});
    unused.set_requires_grad(true);
    {
        TapeScope scope(tape);
        Tensor loss = mul(x, x);
        tape.backward(loss);
    }
    auto g = tape.gradient(unused);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    GradTape tape;
    Tensor v = Tensor::vector({1.0, 2.0});
    v.set_requires_grad(true);
    TapeScope scope(tape);
    Tensor out = scale(v, 2.0);
    CHECK_THROWS_AS(tape.backward(out), Error);
}

TEST_CASE("backward is linear over sums of losses") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> xv(6), wv(3 * 3), bv(3);
        for (auto& v : xv) v = dist(rng);
        for (auto& v : wv) v = dist(rng);
        for (auto& v : bv) v = dist(rng);

        auto build_l1 = [&](const Tensor& x, const Tensor& w,
                            const Tensor& b) {
            return sum(gelu(affine(x, w, b)));
        };
        auto build_l2 = [&](const Tensor& x) {
            return sum(mul(x, x));
        };

        // combined backward
        Tensor x = Tensor::from({2, 3}, xv, true);
        Tensor w = Tensor::from({3, 3}, wv, true);
        Tensor b = Tensor::from({3}, bv, true);
        GradTape tape;
        {
            TapeScope scope(tape);
            tape.backward(add(build_l1(x, w, b), build_l2(x)));
        }

        // separate backwards
        GradTape t1, t2;
        {
            TapeScope scope(t1);
            t1.backward(build_l1(x, w, b));
        }
        {
            TapeScope scope(t2);
            t2.backward(build_l2(x));
        }
        auto gc = tape.gradient(x);
        auto g1 = t1.gradient(x);
        auto g2 = t2.gradient(x);
        for (std::size_t i = 0; i < gc.size(); ++i) {
            CHECK(std::abs(gc[i] - (g1[i] + g2[i])) < 1e-12);
        }
    }
}

TEST_CASE("tape nodes are recorded in topological order") {
    GradTape tape;
    Tensor x = Tensor::from({2, 2}, {1.0, 2.0, 3.0, 4.0}, true);
    {
        TapeScope scope(tape);
        Tensor y = gelu(scale(x, 0.5));
        Tensor loss = sum(mean_rows(y));
        tape.backward(loss);
    }
    CHECK(tape.node_count() == 4);
}

TEST_CASE("finite_diff_check on simple functions") {
    Tensor x = Tensor::scalar(3.0, true);
    Tensor params[] = {x};
    double err = finite_diff_check([&] { return mul(x, x); }, params, 1e-5);
    CHECK(err < 1e-6);

    // central difference is exact for affine functions
    Tensor lin = Tensor::vector({1.5, -2.0, 0.25});
    lin.set_requires_grad(true);
    Tensor coeffs = Tensor::vector({2.0, 3.0, -1.0});
    Tensor lparams[] = {lin};
    double lerr =
        finite_diff_check([&] { return dot(lin, coeffs); }, lparams, 1e-5);
    CHECK(lerr < 1e-9);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
    Tensor p = Tensor::vector({1.0, -2.0, 3.0}, true);
    Tensor params[] = {p};
    AdamState st = AdamState::init(params, 0.1);
    st = adam_step(std::move(st), params, {{0.0, 0.0, 0.0}});
    CHECK(at(p, 0) == 1.0);
    CHECK(at(p, 1) == -2.0);
    CHECK(at(p, 2) == 3.0);
    CHECK(st.step == 1);
}

TEST_CASE("adam first step moves by about -lr") {
    Tensor p = Tensor::scalar(3.0, true);
    Tensor params[] = {p};
    AdamState st = AdamState::init(params, 0.1);
    st = adam_step(std::move(st), params, {{1.0}});
    // mhat = 1, vhat = 1 -> delta = -lr / (1 + eps)
    const double expected = 3.0 - 0.1 / (1.0 + 1e-8);
    CHECK(std::abs(p.scalar_value() - expected) < 1e-15);

    // momentum keeps it moving on a zero gradient, but by less
    const double before = p.scalar_value();
    st = adam_step(std::move(st), params, {{0.0}});
    const double delta2 = p.scalar_value() - before;
    // hand iteration of the update rule
    const double m2 = 0.9 * 0.1;
    const double v2 = 0.999 * 0.001;
    const double mhat2 = m2 / (1.0 - 0.9 * 0.9);
    const double vhat2 = v2 / (1.0 - 0.999 * 0.999);
    const double expected2 = -0.1 * mhat2 / (std::sqrt(vhat2) + 1e-8);
    CHECK(delta2 < 0.0);
    CHECK(std::abs(delta2) < 0.1 / (1.0 + 1e-8));
    CHECK(std::abs(delta2 - expected2) < 1e-12);
}

TEST_CASE("adam rejects shape mismatches") {
    Tensor p = Tensor::vector({1.0, 2.0}, true);
    Tensor params[] = {p};
    AdamState st = AdamState::init(params, 0.1);
    CHECK_THROWS_AS(st = adam_step(std::move(st), params, {{1.0}}), Error);
}

TEST_CASE("lr schedule ramps, peaks, and decays") {
    LrSchedule s{1.0, 100, 0.05, 0.0};
    CHECK(s.warmup_steps() == 5);
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 5) == 1.0); // end of warmup
    CHECK(lr_at(s, 100) == doctest::Approx(0.0).epsilon(1e-15));
    const double expected55 = 0.5 * (1.0 + std::cos(std::numbers::pi * 50.0 / 95.0));
    CHECK(lr_at(s, 55) == doctest::Approx(expected55).epsilon(1e-15));
    for (std::uint64_t step = 0; step <= 100; ++step) {
        CHECK(lr_at(s, step) >= 0.0);
    }
    // continuity at the junction: both branches give peak at step == warmup
    const double cosine_at_junction =
        s.min_lr + (s.peak_lr - s.min_lr) * 0.5 * (1.0 + std::cos(0.0));
    CHECK(lr_at(s, 5) == doctest::Approx(cosine_at_junction).epsilon(1e-15));
    CHECK_THROWS_AS(lr_at(s, 101), Error);

    LrSchedule with_floor{1.0, 100, 0.05, 0.125};
    CHECK(lr_at(with_floor, 100) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("gradients of fused ops match finite differences") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> dist(0.0, 1.0);

    SUBCASE("layer_norm") {
        std::vector<double> xv(8), gv(4), bv(4);
        for (auto& v : xv) v = dist(rng);
        for (auto& v : gv) v = 1.0 + 0.1 * dist(rng);
        for (auto& v : bv) v = dist(rng);
        Tensor x = Tensor::from({2, 4}, xv, true);
        Tensor g = Tensor::from({4}, gv, true);
        Tensor b = Tensor::from({4}, bv, true);
        Tensor params[] = {x, g, b};
        double err = finite_diff_check(
            [&] { return sum(mean_rows(layer_norm(x, g, b, 1e-8))); }, params,
            1e-5);
        CHECK(err < 1e-7);
    }

    SUBCASE("attention_core") {
        std::vector<double> qv(3 * 4), kv(3 * 4), vv(3 * 4);
        for (auto& v : qv) v = dist(rng);
        for (auto& v : kv) v = dist(rng);
        for (auto& v : vv) v = dist(rng);
        Tensor q = Tensor::from({3, 4}, qv, true);
        Tensor k = Tensor::from({3, 4}, kv, true);
        Tensor v = Tensor::from({3, 4}, vv, true);
        Tensor params[] = {q, k, v};
        double err = finite_diff_check(
            [&] {
                return sum(mean_rows(attention_core(q, k, v, 2)));
            },
            params, 1e-5);
        CHECK(err < 1e-7);
    }

    SUBCASE("masked softmax rows") {
        std::vector<double> xv(6);
        for (auto& v : xv) v = dist(rng);
        Tensor x = Tensor::from({2, 3}, xv, true);
        std::vector<std::uint8_t> mask = {1, 0, 1, 1, 1, 1};
        Tensor w = Tensor::from({2, 3}, {0.3, 0.9, -0.5, 1.0, 0.2, 0.4});
        Tensor params[] = {x};
        double err = finite_diff_check(
            [&] {
                return sum(mean_rows(mul(masked_softmax_rows(x, &mask), w)));
            },
            params, 1e-5);
        CHECK(err < 1e-7);
    }

    SUBCASE("info_nce") {
        std::vector<double> qv(5), pv(5);
        for (auto& v : qv) v = dist(rng);
        for (auto& v : pv) v = dist(rng);
        std::vector<double> n1(5), n2(5);
        for (auto& v : n1) v = dist(rng);
        for (auto& v : n2) v = dist(rng);
        Tensor q = Tensor::from({5}, qv, true);
        Tensor p = Tensor::from({5}, pv, true);
        std::vector<std::span<const double>> negs = {n1, n2};
        Tensor params[] = {q, p};
        double err = finite_diff_check(
            [&] { return info_nce_loss(q, p, negs, 0.25); }, params, 1e-5);
        CHECK(err < 1e-7);
    }

    SUBCASE("l2_normalize and dot") {
        std::vector<double> av(6), bv(6);
        for (auto& v : av) v = dist(rng);
        for (auto& v : bv) v = dist(rng);
        Tensor a = Tensor::from({6}, av, true);
        Tensor b = Tensor::from({6}, bv, true);
        Tensor params[] = {a, b};
        double err = finite_diff_check(
            [&] { return dot(l2_normalize(a), l2_normalize(b)); }, params,
            1e-5);
        CHECK(err < 1e-7);
    }
}
