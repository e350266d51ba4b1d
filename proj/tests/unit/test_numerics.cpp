#include <doctest.h>

#include <cmath>

#include "planet/autodiff.hpp"
#include "planet/errors.hpp"
#include "planet/tensor.hpp"
#include "support.hpp"

using namespace planet;
using namespace planet::testing;

TEST_SUITE("tensor") {
    TEST_CASE("matmul identity and scalar cases") {
        const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
        const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
        CHECK(matmul(eye, m) == m);
        CHECK(matmul(Tensor::matrix(1, 1, {2}), Tensor::matrix(1, 1, {3})).item() == 6.0);
    }

    TEST_CASE("matmul agrees with the triple loop") {
        Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t m = 1 + rng.below(16), k = 1 + rng.below(16), n = 1 + rng.below(16);
            const Tensor a = random_tensor(rng, {m, k}), b = random_tensor(rng, {k, n});
            CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
            CHECK(max_abs_diff(matmul_nt(a, transpose(b)), naive_matmul(a, b)) < 1e-12);
            CHECK(max_abs_diff(matmul_tn(transpose(a), b), naive_matmul(a, b)) < 1e-12);
        }
        const Tensor a = random_tensor(rng, {4, 5}), b = random_tensor(rng, {5, 3});
        CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
    }

    TEST_CASE("matmul rejects mismatched extents") {
        CHECK_THROWS_AS(matmul(Tensor(Shape{2, 3}), Tensor(Shape{2, 3})), DimensionError);
    }

    TEST_CASE("softmax") {
        const Tensor s = softmax(Tensor::vector({0, 0}));
        CHECK(s[0] == doctest::Approx(0.5));
        CHECK(s[1] == doctest::Approx(0.5));
        CHECK(softmax(Tensor::vector({-37.5}))[0] == 1.0);
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            const Tensor x = random_tensor(rng, {1 + rng.below(20)}, -50, 50);
            Tensor shifted = x;
            for (auto& v : shifted.data()) v += 13.25;
            const Tensor a = softmax(x), b = softmax(shifted);
            double total = 0.0;
            for (double v : a.data()) total += v;
            CHECK(std::abs(total - 1.0) < 1e-12);
            CHECK(max_abs_diff(a, b) < 1e-12);
        }
        CHECK_THROWS_AS(softmax(Tensor(Shape{0})), DimensionError);
    }

    TEST_CASE("layernorm") {
        const Tensor one = Tensor::vector({1, 1, 1}), zero = Tensor::vector({0, 0, 0});
        const Tensor flat = layernorm(Tensor::vector({5, 5, 5}), one, zero);
        for (double v : flat.data()) CHECK(v == 0.0);
        const Tensor pm = layernorm(Tensor::vector({1, -1}), Tensor::vector({1, 1}), Tensor::vector({0, 0}), 1e-5);
        CHECK(std::abs(pm[0] - 1.0) < 1e-4);
        CHECK(std::abs(pm[1] + 1.0) < 1e-4);
        const Tensor pass = layernorm(Tensor::vector({1, -1}), Tensor::vector({0, 0}), Tensor::vector({7, 7}));
        CHECK(pass[0] == 7.0);
        CHECK(pass[1] == 7.0);
    }

    TEST_CASE("l2_normalize") {
        const Tensor v = l2_normalize(Tensor::vector({3, 4}));
        CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(v[1] == doctest::Approx(0.8).epsilon(1e-15));
        const Tensor u = Tensor::vector({0.6, 0.8});
        CHECK(max_abs_diff(l2_normalize(u), u) < 1e-15);
        CHECK_THROWS_AS(l2_normalize(Tensor::vector({0, 0})), DegenerateInputError);
    }

    TEST_CASE("cosine_sim") {
        CHECK(cosine_sim(Tensor::vector({1, 0}), Tensor::vector({0, 1})) == 0.0);
        CHECK(cosine_sim(Tensor::vector({1, 2}), Tensor::vector({2, 4})) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cosine_sim(Tensor::vector({1, 0}), Tensor::vector({-1, 0})) == -1.0);
        CHECK_THROWS_AS(cosine_sim(Tensor::vector({0, 0}), Tensor::vector({1, 0})), DegenerateInputError);
        Rng rng(5);
        for (int i = 0; i < 50; ++i) {
            const Tensor a = random_tensor(rng, {7}), b = random_tensor(rng, {7});
            const double c = cosine_sim(a, b);
            CHECK(c >= -1.0);
            CHECK(c <= 1.0);
            CHECK(c == cosine_sim(b, a));
            Tensor scaled = a;
            for (auto& v : scaled.data()) v *= 3.5;
            CHECK(std::abs(cosine_sim(scaled, b) - c) < 1e-14);
        }
    }

    TEST_CASE("finite_diff_check") {
        const auto sq = [](const Tensor& x) { return x[0] * x[0]; };
        CHECK(finite_diff_check(sq, Tensor::vector({3}), Tensor::vector({6}), 1e-5) < 1e-8);
        const auto constant = [](const Tensor&) { return 4.0; };
        CHECK(finite_diff_check(constant, Tensor::vector({1, 2}), Tensor::vector({0, 0})) == 0.0);
        const auto bad = [](const Tensor& x) { return std::log(x[0]); };
        CHECK_THROWS_AS(finite_diff_check(bad, Tensor::vector({0}), Tensor::vector({1})), NumericError);
    }
}

TEST_SUITE("autodiff") {
    TEST_CASE("linear and quadratic gradients") {
        ad::Tape tape;
        const ad::Var theta = tape.variable(Tensor::vector({1, 2, 3}));
        tape.backward(ad::sum(theta));
        const Tensor g = tape.grad(theta);
        for (double v : g.data()) CHECK(v == 1.0);

        ad::Tape t2;
        const ad::Var x = t2.variable(Tensor::vector({3}));
        t2.backward(ad::sum(ad::mul(x, x)));
        CHECK(t2.grad(x)[0] == 6.0);
    }

    TEST_CASE("non-scalar loss is a contract error") {
        ad::Tape tape;
        const ad::Var x = tape.variable(Tensor::vector({1, 2}));
        CHECK_THROWS_AS(tape.backward(x), ContractError);
    }

    TEST_CASE("shared parameters accumulate and unreachable ones stay zero") {
        ad::Tape tape;
        const ad::Var a = tape.variable(Tensor::vector({2, -1}));
        const ad::Var unused = tape.variable(Tensor::vector({5, 5}));
        const ad::Var loss = ad::sum(ad::add(ad::mul(a, a), ad::scale(a, 3.0)));
        tape.backward(loss);
        CHECK(tape.grad(a)[0] == 7.0);
        CHECK(tape.grad(a)[1] == 1.0);
        const Tensor gu = tape.grad(unused);
        for (double v : gu.data()) CHECK(v == 0.0);
    }

    TEST_CASE("backward visits each recorded op once") {
        ad::Tape tape;
        const ad::Var x = tape.variable(Tensor::vector({0.3, -0.7}));
        const ad::Var y = ad::tanh(ad::mul(x, x));
        const ad::Var loss = ad::sum(ad::add(y, y));
        tape.backward(loss);
        const std::size_t first = tape.backward_visits();
        CHECK(first <= tape.size());
        tape.backward(loss);
        CHECK(tape.backward_visits() == first);
    }

    // Every differentiable op composed into one graph and checked numerically.
    TEST_CASE("composed graph passes the finite-difference oracle") {
        Rng rng(21);
        const Tensor w0 = random_tensor(rng, {4, 3});
        const Tensor x0 = random_tensor(rng, {5, 4});
        const Tensor g0 = random_tensor(rng, {3}, 0.5, 1.5);
        const ad::Offsets offsets{0, 2, 5};
        const std::vector<std::size_t> ids{4, 0, 2, 2, 1};

        const auto build = [&](ad::Tape& tape, const Tensor& w) {
            const ad::Var W = tape.variable(w);
            const ad::Var X = tape.constant(x0);
            const ad::Var G = tape.variable(g0);
            const ad::Var B = tape.variable(Tensor::vector({0.1, -0.2, 0.05}));
            const std::vector<std::size_t> first_row{0};
            const ad::Var h = ad::tanh(ad::add_row(ad::matmul(ad::gather_rows(X, ids), W), B));
            const ad::Var pooled = ad::segment_mean(h, offsets);
            const ad::Var att = ad::segment_softmax(ad::matmul(h, ad::transpose(ad::gather_rows(W, first_row))), offsets);
            const ad::Var ws = ad::segment_weighted_sum(att, h, offsets);
            const ad::Var ln = ad::layernorm(ad::add(pooled, ws), G, B);
            const ad::Var u = ad::l2_normalize(ln);
            const ad::Var sim = ad::matmul_nt(u, ad::l2_normalize(ad::exp(ad::scale(ad::softmax(ws), 0.5))));
            const ad::Var ce = ad::cross_entropy_diag(ad::scale(sim, 4.0));
            const ad::Var cs = ad::cosine_sim(ad::sub(pooled, ws), ad::mul(pooled, pooled));
            return std::make_tuple(W, ad::add(ad::add(ce, ad::mean(ad::log(ad::exp(u)))), ad::mul_scalar(cs, ad::mean(B))));
        };

        ad::Tape tape;
        auto [W, loss] = build(tape, w0);
        tape.backward(loss);
        const Tensor analytic = tape.grad(W);
        const auto f = [&](const Tensor& w) {
            ad::Tape t;
            return std::get<1>(build(t, w)).value().item();
        };
        CHECK(finite_diff_check(f, w0, analytic, 1e-5) < 1e-4);
    }

    TEST_CASE("log rejects non-positive input") {
        ad::Tape tape;
        const ad::Var x = tape.variable(Tensor::vector({1.0, 0.0}));
        CHECK_THROWS_AS(ad::log(x), NumericError);
    }

    TEST_CASE("InfoNCE gradient on random 3x3 similarities") {
        Rng rng(8);
        const Tensor s0 = random_tensor(rng, {3, 3});
        ad::Tape tape;
        const ad::Var s = tape.variable(s0);
        tape.backward(ad::cross_entropy_diag(s));
        const auto f = [](const Tensor& s) {
            ad::Tape t;
            return ad::cross_entropy_diag(t.constant(s)).value().item();
        };
        CHECK(finite_diff_check(f, s0, tape.grad(s)) < 1e-6);
    }
}
