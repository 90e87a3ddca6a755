// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rnanet/errors.hpp"
#include "rnanet/gradcheck.hpp"
#include "rnanet/layers.hpp"
#include "rnanet/matrix.hpp"
#include "rnanet/optim.hpp"
#include "support/suites.hpp"

using namespace rnanet;
using doctest::Approx;

namespace {

void check_close(std::span<const double> got, std::span<const double> want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(tol));
}

}  // namespace

TEST_SUITE("matrix") {
  TEST_CASE("identity times a matrix returns it") {
    const Matrix m{{1, 2}, {3, 4}};
    CHECK(matmul(Matrix::identity(2), m) == m);
  }

  TEST_CASE("row times column") {
    const Matrix r = matmul(Matrix{{1, 2}}, Matrix{{3}, {4}});
    CHECK(r.rows() == 1);
    CHECK(r.cols() == 1);
    CHECK(r(0, 0) == 11.0);
  }

  TEST_CASE("zero matrix annihilates") {
    const Matrix z = matmul(Matrix(2, 2), Matrix{{1, 2, 3}, {4, 5, 6}});
    CHECK(z == Matrix(2, 3));
  }

  TEST_CASE("shape mismatch is a configuration error") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ConfigError);
  }

  TEST_CASE("non-finite entries are rejected at construction") {
    CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1.0, std::nan("")}), NumericalError);
    CHECK_THROWS_AS((Matrix{{std::numeric_limits<double>::infinity()}}), NumericalError);
  }

  TEST_CASE("transposed products agree with explicit transposes") {
    std::mt19937_64 rng(3);
    const Matrix a = testing::random_matrix(4, 5, rng);
    const Matrix b = testing::random_matrix(6, 5, rng);
    const Matrix c = testing::random_matrix(4, 3, rng);
    check_close(matmul_transpose_b(a, b).values(), matmul(a, transpose(b)).values(), 1e-14);
    check_close(matmul_transpose_a(a, c).values(), matmul(transpose(a), c).values(), 1e-14);
  }

  TEST_CASE("matmul is associative on random triples") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
      std::uniform_int_distribution<std::size_t> dim(1, 8);
      const std::size_t p = dim(rng), q = dim(rng), r = dim(rng), s = dim(rng);
      const Matrix a = testing::random_matrix(p, q, rng);
      const Matrix b = testing::random_matrix(q, r, rng);
      const Matrix c = testing::random_matrix(r, s, rng);
      const Matrix lhs = matmul(matmul(a, b), c);
      const Matrix rhs = matmul(a, matmul(b, c));
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK(std::abs(lhs.values()[i] - rhs.values()[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("hconcat and column_block are inverses") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5}, {6}};
    const Matrix ab = hconcat(a, b);
    CHECK(ab == Matrix{{1, 2, 5}, {3, 4, 6}});
    CHECK(column_block(ab, 0, 2) == a);
    CHECK(column_block(ab, 2, 1) == b);
  }

  TEST_CASE("gather_rows and vstack") {
    const Matrix m{{1, 2}, {3, 4}, {5, 6}};
    const std::vector<std::size_t> idx{2, 0, 2};
    CHECK(gather_rows(m, idx) == Matrix{{5, 6}, {1, 2}, {5, 6}});
    const std::vector<Matrix> parts{Matrix{{1, 2}}, Matrix{{3, 4}, {5, 6}}};
    CHECK(vstack(parts) == m);
  }

  TEST_CASE("solve recovers a known solution") {
    const Matrix a{{4, 1, 0}, {1, 3, -1}, {0, -1, 2}};
    const Matrix x{{1, 2}, {-1, 0}, {3, 1}};
    const Matrix s = solve(a, matmul(a, x));
    check_close(s.values(), x.values(), 1e-12);
  }

  TEST_CASE("l2_norm") {
    const std::vector<double> v{3, 4};
    CHECK(l2_norm(v) == 5.0);
    CHECK(l2_norm(std::vector<double>(5, 0.0)) == 0.0);
    CHECK(l2_norm(std::vector<double>{0, 1, 0}) == 1.0);
  }
}

TEST_SUITE("layers") {
  TEST_CASE("identity layer passes input through") {
    const LinearLayerParams p(Matrix::identity(2), {0, 0});
    CHECK(linear_forward(p, Matrix{{5, 7}}) == Matrix{{5, 7}});
  }

  TEST_CASE("diagonal layer with bias") {
    const LinearLayerParams p(Matrix{{2, 0}, {0, 3}}, {1, 1});
    CHECK(linear_forward(p, Matrix{{1, 1}}) == Matrix{{3, 4}});
  }

  TEST_CASE("zero input yields the bias on every row") {
    const LinearLayerParams p(Matrix{{2, 0}, {0, 3}}, {0.5, -1});
    CHECK(linear_forward(p, Matrix(3, 2)) == Matrix{{0.5, -1}, {0.5, -1}, {0.5, -1}});
  }

  TEST_CASE("zero upstream gradient gives zero gradients") {
    std::mt19937_64 rng(1);
    const LinearLayerParams p(testing::random_matrix(4, 3, rng), {1, 2, 3, 4});
    LinearCache cache;
    linear_forward(p, testing::random_matrix(2, 3, rng), &cache);
    const auto g = linear_backward(p, cache, Matrix(2, 4));
    CHECK(g.params.weight == Matrix(4, 3));
    CHECK(g.params.bias == std::vector<double>(4, 0.0));
    CHECK(g.input == Matrix(2, 3));
  }

  TEST_CASE("identity layer passes the gradient through") {
    const LinearLayerParams p(Matrix::identity(3), {0, 0, 0});
    LinearCache cache;
    linear_forward(p, Matrix{{1, -2, 3}}, &cache);
    const Matrix g{{0.5, 0.25, -1}};
    CHECK(linear_backward(p, cache, g).input == g);
  }

  TEST_CASE("a cache is consumed by backward") {
    const LinearLayerParams p(Matrix::identity(2), {0, 0});
    LinearCache cache;
    linear_forward(p, Matrix{{1, 2}}, &cache);
    linear_backward(p, cache, Matrix{{1, 1}});
    CHECK_THROWS_AS(linear_backward(p, cache, Matrix{{1, 1}}), ConfigError);
  }

  TEST_CASE("random 3x4 layer matches finite differences") {
    std::mt19937_64 rng(5);
    const Matrix w = testing::random_matrix(4, 3, rng);
    const Matrix x = testing::random_matrix(2, 3, rng);
    const Matrix g = testing::random_matrix(2, 4, rng);
    const LinearLayerParams p(w, {0.1, -0.2, 0.3, 0.0});
    LinearCache cache;
    linear_forward(p, x, &cache);
    const auto grads = linear_backward(p, cache, g);
    auto f = [&](std::span<const double> wv) {
      const LinearLayerParams q(Matrix(4, 3, std::vector<double>(wv.begin(), wv.end())), p.bias);
      return dot(linear_forward(q, x).values(), g.values());
    };
    CHECK(relative_error(grads.params.weight.values(), finite_difference_grad(f, w.values())) < 1e-6);
  }

  TEST_CASE("relu forward and subgradient at zero") {
    ReluCache cache;
    CHECK(relu_forward(Matrix{{-1, 0, 2}}, &cache) == Matrix{{0, 0, 2}});
    CHECK(relu_backward(cache, Matrix{{1, 1, 1}}) == Matrix{{0, 0, 1}});
  }

  TEST_CASE("uniform logits over 8 classes cost ln 8") {
    const std::vector<int> labels{3};
    CHECK(softmax_cross_entropy(Matrix(1, 8), labels).loss == Approx(std::log(8.0)).epsilon(1e-15));
  }

  TEST_CASE("large correct margin drives the loss to zero") {
    const std::vector<int> labels{1};
    double prev = INFINITY;
    for (double margin : {1.0, 5.0, 20.0, 50.0}) {
      const double l = softmax_cross_entropy(Matrix{{0, margin, 0}}, labels).loss;
      CHECK(l < prev);
      prev = l;
    }
    CHECK(prev < 1e-20);
  }

  TEST_CASE("cross-entropy matches frozen reference") {
    const std::vector<int> labels{2, 1};
    const auto r = softmax_cross_entropy(Matrix{{1, 2, 0.5}, {-1, 0, 3}}, labels);
    CHECK(r.loss == Approx(oracle::kCrossEntropy).epsilon(1e-14));
    check_close(r.grad_logits.values(), oracle::kCrossEntropyGrad, 1e-13);
  }

  TEST_CASE("cross-entropy is shift invariant per row") {
    std::mt19937_64 rng(8);
    const std::vector<int> labels{0, 3, 2, 1};
    for (int t = 0; t < 20; ++t) {
      const Matrix logits = testing::random_matrix(4, 5, rng, 2.0);
      Matrix shifted = logits;
      for (std::size_t r = 0; r < 4; ++r) {
        const double c = 100.0 * (double(r) - 1.5);
        for (double& v : shifted.row(r)) v += c;
      }
      CHECK(std::abs(softmax_cross_entropy(logits, labels).loss -
                     softmax_cross_entropy(shifted, labels).loss) < 1e-9);
    }
  }

  TEST_CASE("out-of-range label") {
    const std::vector<int> labels{3};
    CHECK_THROWS_AS(softmax_cross_entropy(Matrix(1, 3), labels), ConfigError);
  }

  TEST_CASE("argmax ties go to the lowest index") {
    CHECK(argmax_rows(Matrix(1, 8)) == std::vector<int>{0});
    CHECK(argmax_rows(Matrix{{1, 5, 2}}) == std::vector<int>{1});
    CHECK(argmax_rows(Matrix{{2, 7, 7}}) == std::vector<int>{1});
  }
}

TEST_SUITE("optim") {
  std::vector<std::span<double>> spans(std::vector<double>& p) { return {std::span<double>(p)}; }
  std::vector<std::span<const double>> cspans(const std::vector<double>& g) {
    return {std::span<const double>(g)};
  }

  TEST_CASE("zero learning rate leaves parameters alone") {
    Sgd sgd({0.0, 0.9, 0.1});
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{5.0, 3.0};
    for (int i = 0; i < 3; ++i) sgd.step(spans(p), cspans(g));
    CHECK(p == std::vector<double>{1.0, -2.0});
  }

  TEST_CASE("plain step") {
    Sgd sgd({1.0, 0.0, 0.0});
    std::vector<double> p{1.0};
    sgd.step(spans(p), cspans(std::vector<double>{0.5}));
    CHECK(p[0] == 0.5);
  }

  TEST_CASE("two momentum steps on a constant gradient") {
    const double lr = 0.1, g = 2.0;
    Sgd sgd({lr, 0.9, 0.0});
    std::vector<double> p{0.0};
    const std::vector<double> grad{g};
    sgd.step(spans(p), cspans(grad));
    sgd.step(spans(p), cspans(grad));
    CHECK(-p[0] == Approx(lr * g * (1.0 + 1.9)).epsilon(1e-15));
  }

  TEST_CASE("weight decay adds to the gradient") {
    Sgd sgd({1.0, 0.0, 0.5});
    std::vector<double> p{2.0};
    sgd.step(spans(p), cspans(std::vector<double>{0.0}));
    CHECK(p[0] == 1.0);
  }

  TEST_CASE("non-finite gradient aborts without touching anything") {
    Sgd sgd({0.1, 0.9, 0.0});
    std::vector<double> a{1.0}, b{2.0};
    const std::vector<double> ga{1.0}, gb{std::nan("")};
    const std::vector<std::span<double>> ps{a, b};
    const std::vector<std::span<const double>> gs{ga, gb};
    CHECK_THROWS_AS(sgd.step(ps, gs), NumericalError);
    CHECK(a[0] == 1.0);
    CHECK(b[0] == 2.0);
  }

  TEST_CASE("shape mismatch") {
    Sgd sgd({});
    std::vector<double> p{1.0, 2.0};
    CHECK_THROWS_AS(sgd.step(spans(p), cspans(std::vector<double>{1.0})), ConfigError);
  }
}

TEST_SUITE("gradcheck") {
  TEST_CASE("quadratic is exact") {
    const std::vector<double> x{3.0};
    auto g = finite_difference_grad([](std::span<const double> v) { return v[0] * v[0]; }, x, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-8);
  }

  TEST_CASE("constant function has zero gradient") {
    const std::vector<double> x{1, 2, 3};
    auto g = finite_difference_grad([](std::span<const double>) { return 4.2; }, x);
    CHECK(g == std::vector<double>(3, 0.0));
  }

  TEST_CASE("gradient of the norm") {
    const std::vector<double> x{3, 4};
    auto g = finite_difference_grad([](std::span<const double> v) { return l2_norm(v); }, x);
    CHECK(std::abs(g[0] - 0.6) < 1e-7);
    CHECK(std::abs(g[1] - 0.8) < 1e-7);
  }

  TEST_CASE("layer primitives pass the oracle sweep") {
    for (const auto& r : testing::gradient_oracle_suite(17, 20)) {
      if (r.name != "linear" && r.name != "relu" && r.name != "cross-entropy") continue;
      INFO(r.name);
      CHECK_FALSE(r.failed_to_run);
      CHECK(r.worst < 1e-6);
    }
  }
}
