#include <doctest.h>

#include "pcnn/tensor.hpp"

using pcnn::Rng;
using pcnn::Shape;
using pcnn::Tensor;

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(Shape({0}), pcnn::ShapeError);
  CHECK_THROWS_AS(Shape({3, -1}), pcnn::ShapeError);
  CHECK_THROWS_AS(Shape(std::vector<int64_t>{}), pcnn::ShapeError);
  CHECK_THROWS_AS(Shape({1'000'000'000, 1'000'000'000, 1'000'000'000}),
                  pcnn::ShapeError);
  CHECK(Shape({2, 3, 4}).element_count() == 24);
  CHECK(Shape({2, 3}).str() == "[2,3]");
}

TEST_CASE("filled tensors") {
  const Tensor z = Tensor::filled({2, 2}, 0.0);
  CHECK(z.size() == 4);
  for (int64_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);

  const Tensor s = Tensor::filled({1}, 7.5);
  CHECK(s.size() == 1);
  CHECK(s[0] == 7.5);

  const Tensor ones = Tensor::filled({3, 3, 2}, 1.0);
  CHECK(ones.shape() == Shape({3, 3, 2}));
  CHECK(ones.size() == 18);
  for (int64_t i = 0; i < ones.size(); ++i) CHECK(ones[i] == 1.0);
}

TEST_CASE("random uniform determinism and range") {
  Rng a(42), b(42);
  const Tensor ta = Tensor::random_uniform({4}, -1.0, 1.0, a);
  const Tensor tb = Tensor::random_uniform({4}, -1.0, 1.0, b);
  for (int64_t i = 0; i < 4; ++i) CHECK(ta[i] == tb[i]);

  Rng c(7);
  const Tensor tc = Tensor::random_uniform({2, 2}, 0.0, 0.1, c);
  for (int64_t i = 0; i < tc.size(); ++i) {
    CHECK(tc[i] >= 0.0);
    CHECK(tc[i] < 0.1);
  }

  Rng d(123);
  const Tensor td = Tensor::random_uniform({1000}, 0.0, 1.0, d);
  double mean = 0.0;
  for (int64_t i = 0; i < td.size(); ++i) mean += td[i];
  mean /= 1000.0;
  CHECK(mean > 0.45);
  CHECK(mean < 0.55);

  Rng e(1);
  CHECK_THROWS_AS(Tensor::random_uniform({2}, 1.0, 1.0, e), pcnn::ArgumentError);
  CHECK_THROWS_AS(Tensor::random_uniform({2}, 2.0, 1.0, e), pcnn::ArgumentError);
}

TEST_CASE("row-major addressing round trip") {
  // flat(i,j,k) = (i*B + j)*C + k for shape [A,B,C]
  Tensor t({3, 4, 5});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t j = 0; j < 4; ++j)
      for (int64_t k = 0; k < 5; ++k) {
        const int64_t flat = (i * 4 + j) * 5 + k;
        CHECK(t.at(i, j, k) == static_cast<double>(flat));
      }
}

TEST_CASE("reshape preserves order") {
  Tensor t({2, 3});
  for (int64_t i = 0; i < 6; ++i) t[i] = static_cast<double>(i + 1);
  const Tensor flat = pcnn::reshape(t, {6});
  for (int64_t i = 0; i < 6; ++i) CHECK(flat[i] == t[i]);

  const Tensor back = pcnn::reshape(flat, {2, 3});
  for (int64_t i = 0; i < 6; ++i) CHECK(back[i] == t[i]);

  CHECK(pcnn::reshape(Tensor({29, 29, 64}), {53824}).size() == 29 * 29 * 64);
  CHECK_THROWS_AS(pcnn::reshape(Tensor({6}), {4}), pcnn::ShapeError);
}

TEST_CASE("matmul identity and hand example") {
  Tensor eye = Tensor::zeros({3, 3});
  for (int64_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Rng rng(5);
  const Tensor x = Tensor::random_uniform({3, 4}, -1.0, 1.0, rng);
  const Tensor ix = pcnn::matmul(eye, x);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(ix[i] == x[i]);

  Tensor a({2, 2}), b({2, 2});
  a[0] = 1; a[1] = 2; a[2] = 3; a[3] = 4;
  b[0] = 5; b[1] = 6; b[2] = 7; b[3] = 8;
  const Tensor c = pcnn::matmul(a, b);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);

  CHECK_THROWS_AS(pcnn::matmul(Tensor({2, 3}), Tensor({2, 3})), pcnn::ShapeError);
}

TEST_CASE("matmul associativity on small integers") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t m = 1 + static_cast<int64_t>(rng.next_below(4));
    const int64_t k = 1 + static_cast<int64_t>(rng.next_below(4));
    const int64_t p = 1 + static_cast<int64_t>(rng.next_below(4));
    const int64_t n = 1 + static_cast<int64_t>(rng.next_below(4));
    auto randint = [&](const Shape& s) {
      Tensor t(s);
      for (int64_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<double>(static_cast<int64_t>(rng.next_below(7)) - 3);
      return t;
    };
    const Tensor a = randint({m, k});
    const Tensor b = randint({k, p});
    const Tensor c = randint({p, n});
    const Tensor left = pcnn::matmul(pcnn::matmul(a, b), c);
    const Tensor right = pcnn::matmul(a, pcnn::matmul(b, c));
    for (int64_t i = 0; i < left.size(); ++i) CHECK(left[i] == right[i]);
  }
}

TEST_CASE("elementwise ops") {
  Tensor t({3});
  t[0] = 1; t[1] = 2; t[2] = 3;
  const Tensor doubled = pcnn::scale(t, 2.0);
  CHECK(doubled[0] == 2);
  CHECK(doubled[1] == 4);
  CHECK(doubled[2] == 6);

  const Tensor zeros = Tensor::zeros({3});
  const Tensor same = pcnn::add(t, zeros);
  for (int64_t i = 0; i < 3; ++i) CHECK(same[i] == t[i]);

  const Tensor diff = pcnn::sub(t, t);
  for (int64_t i = 0; i < 3; ++i) CHECK(diff[i] == 0.0);

  CHECK_THROWS_AS(pcnn::add(t, Tensor({4})), pcnn::ShapeError);
}
