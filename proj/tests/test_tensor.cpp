#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mmfusion/tensor.hpp"

using namespace mmf;
using gradcheck::check_gradient;

namespace {

Tensor randn_leaf(Shape shape, std::mt19937_64& rng, bool requires_grad) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> d(numel(shape));
  for (auto& v : d) v = g(rng);
  return Tensor::leaf(std::move(shape), std::move(d), requires_grad);
}

}  // namespace

TEST_CASE("matmul identity and small products") {
  Tensor eye = Tensor::leaf({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::leaf({2, 2}, {3, 4, 5, 6});
  Tensor c = matmul(eye, b);
  CHECK(c.data() == std::vector<double>{3, 4, 5, 6});

  Tensor row = Tensor::leaf({1, 2}, {1, 2});
  Tensor col = Tensor::leaf({2, 1}, {3, 4});
  CHECK(matmul(row, col).item() == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("matmul rejects mismatched inner dims") {
  Tensor a = Tensor::leaf({2, 3}, std::vector<double>(6, 1.0));
  Tensor b = Tensor::leaf({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("(2,3)"), std::invalid_argument);
}

TEST_CASE("matmul gradient matches finite differences") {
  Tensor a = Tensor::leaf({2, 2}, {0.5, -1, 2, 0.3}, true);
  Tensor b = Tensor::leaf({2, 2}, {1, 2, 3, 4}, true);
  auto loss = [&] { return sum_all(matmul(a, b)); };
  CHECK(check_gradient(loss, a) < 1e-4);
  CHECK(check_gradient(loss, b) < 1e-4);
}

TEST_CASE("batched matmul with broadcast 2D side") {
  std::mt19937_64 rng(1);
  Tensor a = randn_leaf({2, 3, 4}, rng, true);
  Tensor w = randn_leaf({4, 5}, rng, true);
  Tensor c = matmul(a, w);
  CHECK(c.shape() == Shape{2, 3, 5});
  auto loss = [&] { return sum_all(tanh_op(matmul(a, w))); };
  CHECK(check_gradient(loss, a) < 1e-4);
  CHECK(check_gradient(loss, w) < 1e-4);

  Tensor b = randn_leaf({2, 4, 3}, rng, true);
  Tensor d = matmul(a, b);
  CHECK(d.shape() == Shape{2, 3, 3});
  auto loss2 = [&] { return sum_all(tanh_op(matmul(a, b))); };
  CHECK(check_gradient(loss2, a) < 1e-4);
  CHECK(check_gradient(loss2, b) < 1e-4);
}

TEST_CASE("softmax basics") {
  Tensor x = Tensor::leaf({2}, {0, 0});
  Tensor y = softmax(x, 0);
  CHECK(y.data()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.data()[1] == doctest::Approx(0.5).epsilon(1e-12));

  // Max subtraction keeps huge logits finite.
  Tensor big = softmax(Tensor::leaf({2}, {1000, 0}), 0);
  CHECK(big.data()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(big.data()[1]));

  Tensor z = softmax(Tensor::leaf({3}, {1, 2, 3}), 0);
  double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i)
    CHECK(z.data()[i] ==
          doctest::Approx(std::exp(i + 1.0) / denom).epsilon(1e-12));
}

TEST_CASE("softmax slices sum to one for random inputs") {
  std::mt19937_64 rng(7);
  Tensor x = randn_leaf({3, 4, 5}, rng, false);
  Tensor y = softmax(x, 1);
  for (double v : y.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (int o = 0; o < 3; ++o)
    for (int in = 0; in < 5; ++in) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += y.data()[(o * 4 + k) * 5 + in];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("softmax rejects non-finite input") {
  Tensor x = Tensor::leaf({2}, {std::nan(""), 0.0});
  CHECK_THROWS_AS(softmax(x, 0), std::domain_error);
}

TEST_CASE("softmax gradient") {
  std::mt19937_64 rng(3);
  Tensor x = randn_leaf({2, 3}, rng, true);
  Tensor w = randn_leaf({2, 3}, rng, false);
  auto loss = [&] { return sum_all(mul(softmax(x, 1), w)); };
  CHECK(check_gradient(loss, x) < 1e-4);
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  double lo = sigmoid(Tensor::scalar(-100.0)).item();
  CHECK(lo > 0.0);
  CHECK(lo < 1e-40);
  Tensor x = Tensor::leaf({1}, {0.7}, true);
  auto loss = [&] { return sum_all(sigmoid(x)); };
  CHECK(check_gradient(loss, x, 1e-4) < 1e-6);
}

TEST_CASE("elementwise ops and shape errors") {
  Tensor a = Tensor::leaf({3}, {1, 2, 3}, true);
  Tensor ones = Tensor::full({3}, 1.0);
  CHECK(mul(a, ones).data() == std::vector<double>{1, 2, 3});
  Tensor b = Tensor::leaf({2}, {1, 2});
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(mul(a, b), std::invalid_argument);

  std::mt19937_64 rng(9);
  Tensor x = randn_leaf({2, 3}, rng, true);
  Tensor y = randn_leaf({2, 3}, rng, true);
  auto loss = [&] { return mean_all(mul(tanh_op(x), sub(x, y))); };
  CHECK(check_gradient(loss, x) < 1e-4);
  CHECK(check_gradient(loss, y) < 1e-4);
}

TEST_CASE("concat shapes and gradient") {
  std::mt19937_64 rng(11);
  Tensor a = randn_leaf({2, 3, 4}, rng, true);
  Tensor b = randn_leaf({2, 3, 4}, rng, true);
  Tensor c = concat({a, b}, 2);
  CHECK(c.shape() == Shape{2, 3, 8});
  // Slicing the first block back out recovers a.
  Tensor front = narrow(c, 2, 0, 4);
  CHECK(front.data() == a.data());
  auto loss = [&] { return sum_all(tanh_op(concat({a, b}, 2))); };
  CHECK(check_gradient(loss, a) < 1e-4);
  CHECK(check_gradient(loss, b) < 1e-4);
  CHECK_THROWS_AS(concat({a, randn_leaf({2, 2, 4}, rng, false)}, 2),
                  std::invalid_argument);
}

TEST_CASE("stack select narrow transpose round trips") {
  std::mt19937_64 rng(13);
  Tensor a = randn_leaf({2, 4}, rng, true);
  Tensor b = randn_leaf({2, 4}, rng, true);
  Tensor s = stack({a, b}, 1);
  CHECK(s.shape() == Shape{2, 2, 4});
  CHECK(select(s, 1, 0).data() == a.data());
  CHECK(select(s, 1, 1).data() == b.data());

  Tensor t = transpose_last(s);
  CHECK(t.shape() == Shape{2, 4, 2});
  CHECK(transpose_last(t).data() == s.data());

  auto loss = [&] {
    return sum_all(tanh_op(transpose_last(stack({a, b}, 1))));
  };
  CHECK(check_gradient(loss, a) < 1e-4);

  CHECK_THROWS_AS(select(s, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(narrow(s, 1, 1, 4), std::invalid_argument);
}

TEST_CASE("dropout semantics") {
  std::mt19937_64 rng(17);
  Tensor x = randn_leaf({100}, rng, false);
  // Eval mode and rate 0 are exact identities.
  CHECK(dropout(x, 0.2, false, rng).data() == x.data());
  CHECK(dropout(x, 0.0, true, rng).data() == x.data());
  Tensor y = dropout(x, 0.5, true, rng);
  int zeros = 0;
  for (int i = 0; i < 100; ++i) {
    if (y.data()[i] == 0.0)
      ++zeros;
    else
      CHECK(y.data()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-12));
  }
  CHECK(zeros > 20);
  CHECK(zeros < 80);
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), std::invalid_argument);
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::leaf({3}, {1, 2, 3}, true);
  backward(sum_all(x));
  CHECK(x.grad() == std::vector<double>{1, 1, 1});

  Tensor y = Tensor::leaf({2}, {1, 2}, true);
  backward(sum_all(mul(y, y)));
  CHECK(y.grad() == std::vector<double>{2, 4});

  Tensor z = Tensor::leaf({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS(backward(add(z, z)), std::invalid_argument);
}

TEST_CASE("gradient accumulates additively across uses and backward calls") {
  Tensor x = Tensor::leaf({2}, {1.5, -2.0}, true);
  // Same node used twice: gradient doubles versus single use.
  backward(sum_all(add(x, x)));
  CHECK(x.grad() == std::vector<double>{2, 2});
  // Second backward without zeroing accumulates further.
  backward(sum_all(x));
  CHECK(x.grad() == std::vector<double>{3, 3});
}

TEST_CASE("non-requires-grad leaves keep zero grad") {
  Tensor x = Tensor::leaf({2}, {1, 2}, true);
  Tensor c = Tensor::leaf({2}, {5, 6}, false);
  backward(sum_all(mul(x, c)));
  CHECK(x.grad() == std::vector<double>{5, 6});
  CHECK(c.grad() == std::vector<double>{0, 0});
}

TEST_CASE("finite difference oracle sanity") {
  // f = sum -> all ones; f = sum of squares at [3] -> [6].
  auto sum_f = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  };
  auto g = gradcheck::finite_difference_grad(sum_f, {1.0, -2.0, 0.5}, 1e-4);
  for (double v : g) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));

  auto sq = [](const std::vector<double>& v) { return v[0] * v[0]; };
  auto g2 = gradcheck::finite_difference_grad(sq, {3.0}, 1e-4);
  CHECK(g2[0] == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("oracle agrees with backward on a two-layer network") {
  std::mt19937_64 rng(23);
  Tensor x = randn_leaf({2, 3}, rng, false);
  Tensor w1 = randn_leaf({3, 4}, rng, true);
  Tensor w2 = randn_leaf({4, 1}, rng, true);
  auto loss = [&] {
    return mean_all(matmul(tanh_op(matmul(x, w1)), w2));
  };
  CHECK(check_gradient(loss, w1) < 1e-4);
  CHECK(check_gradient(loss, w2) < 1e-4);
}
