#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lstma/math.hpp"
#include "lstma/random.hpp"

using namespace lstma;

TEST_CASE("sigmoid values and symmetry") {
  CHECK(sigmoid(Vec{0.0})[0] == 0.5);
  CHECK(sigmoid(Vec{2.0})[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(std::abs(sigmoid(Vec{2.0})[0] - 0.8807970779778823) < 1e-9);

  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const double x = rng.uniform(-30.0, 30.0);
    const Vec pos = sigmoid(Vec{x});
    const Vec neg = sigmoid(Vec{-x});
    CHECK(std::abs(neg[0] - (1.0 - pos[0])) < 1e-15);
  }
  // No overflow at the extremes.
  const Vec extreme = sigmoid(Vec{-800.0, 800.0});
  CHECK(extreme[0] == 0.0);
  CHECK(extreme[1] == 1.0);
}

TEST_CASE("tanh values and oddness") {
  CHECK(lstma::tanh(Vec{0.0})[0] == 0.0);
  CHECK(std::abs(lstma::tanh(Vec{1.0})[0] - 0.7615941559557649) < 1e-9);
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const double x = rng.uniform(-5.0, 5.0);
    CHECK(lstma::tanh(Vec{-x})[0] == -lstma::tanh(Vec{x})[0]);
  }
}

TEST_CASE("nonlinearities reject non-finite input") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(sigmoid(Vec{nan}), std::domain_error);
  CHECK_THROWS_AS(lstma::tanh(Vec{inf}), std::domain_error);
  CHECK_THROWS_AS(softmax(Vec{1.0, nan}), std::domain_error);
  CHECK_THROWS(softmax(Vec{}));
}

TEST_CASE("softmax") {
  const Vec flat = softmax(Vec{3.0, 3.0, 3.0, 3.0});
  for (double p : flat.values()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  const Vec two = softmax(Vec{1.0, 0.0});
  const double e = std::exp(1.0);
  CHECK(std::abs(two[0] - e / (e + 1.0)) < 1e-12);
  CHECK(std::abs(two[0] - 0.731058) < 1e-6);
  CHECK(std::abs(two[1] - 0.268941) < 1e-6);

  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    Vec x(7);
    for (double& v : x.values()) v = rng.uniform(-10.0, 10.0);
    const double c = rng.uniform(-100.0, 100.0);
    Vec shifted = x;
    for (double& v : shifted.values()) v += c;
    const Vec a = softmax(x);
    const Vec b = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      sum += a[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  // Large logits stay finite.
  const Vec big = softmax(Vec{1000.0, 999.0});
  CHECK(std::abs(big[0] - e / (e + 1.0)) < 1e-12);
}

TEST_CASE("affine") {
  CHECK(affine(Mat(2, 3), Vec{1, 2, 3}, Mat(2, 2), Vec{5, 6}, Vec{1, 2}) == Vec{1, 2});
  CHECK(affine(Mat::identity(2), Vec{3, 4}, Mat(2, 1), Vec{0}, Vec{0, 0}) == Vec{3, 4});
  const Vec y = affine(Mat(1, 2, {1, 1}), Vec{2, 3}, Mat(1, 1, {2}), Vec{1}, Vec{0.5});
  CHECK(y == Vec{7.5});
}

TEST_CASE("affine names the mismatched operand") {
  auto message = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      return e.what();
    }
    return {};
  };
  const Mat t(2, 3);
  const Mat r(2, 2);
  CHECK(message([&] { affine(t, Vec(2), r, Vec(2), Vec(2)); }).find('x') != std::string::npos);
  CHECK(message([&] { affine(t, Vec(3), r, Vec(3), Vec(2)); }).find('h') != std::string::npos);
  CHECK(message([&] { affine(t, Vec(3), Mat(3, 2), Vec(2), Vec(2)); }).find('R') !=
        std::string::npos);
  CHECK(message([&] { affine(t, Vec(3), r, Vec(2), Vec(5)); }).find('b') != std::string::npos);
}

TEST_CASE("dense helpers") {
  Mat a(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(matvec(a, Vec{1, 0, -1}) == Vec{-2, -2});

  Vec y(3);
  const Vec x{1, 2};
  matvec_transpose_acc(a, x.values(), y.values());
  CHECK(y == Vec{9, 12, 15});

  Mat o(2, 2);
  const Vec u{1, 2};
  const Vec v{3, 4};
  outer_acc(o, u.values(), v.values());
  CHECK(o == Mat(2, 2, {3, 4, 6, 8}));

  Vec acc{1, 1};
  axpy(2.0, u.values(), acc.values());
  CHECK(acc == Vec{3, 5});
  CHECK(dot(u.values(), v.values()) == 11.0);

  CHECK(all_finite(u.values()));
  const Vec bad{1.0, std::numeric_limits<double>::infinity()};
  CHECK_FALSE(all_finite(bad.values()));
  CHECK_THROWS_AS(require_finite(bad.values(), "bad"), std::domain_error);
  CHECK_THROWS(Mat(2, 2, std::vector<double>{1, 2, 3}));
}

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto n = a.below(7);
    CHECK(n == b.below(7));
    CHECK(n < 7);
  }
}
