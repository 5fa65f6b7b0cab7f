#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "momn/attention.hpp"
#include "momn/spectral.hpp"
#include "test_util.hpp"

using namespace momn;
using namespace momn::attention;
using momn::test::random_matrix;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

std::vector<double> random_unit_vector(std::uint64_t seed, std::size_t c) {
  Rng rng(seed);
  std::vector<double> v(c);
  for (double& x : v) x = rng.uniform();
  return v;
}

}  // namespace

TEST_SUITE("AttentionParams") {
  TEST_CASE("hidden width floors at 1") {
    CHECK(hidden_width(256, 16) == 16);
    CHECK(hidden_width(8, 16) == 1);
    CHECK(kind_of([] { hidden_width(8, 0); }) == ErrorKind::Parameter);
  }

  TEST_CASE("default params are seeded, bounded, zero-bias") {
    const auto p = default_params(32, 16, 3);
    CHECK(p.w1.rows() == 2);
    CHECK(p.w1.cols() == 32);
    CHECK(p.w2.rows() == 32);
    CHECK(p.w2.cols() == 2);
    CHECK(max_abs(p.w1) <= 0.1);
    CHECK(max_abs(p.w2) <= 0.1);
    for (double b : p.b1) CHECK(b == 0.0);
    for (double b : p.b2) CHECK(b == 0.0);
    CHECK(default_params(32, 16, 3).w1 == p.w1);
    CHECK_FALSE(default_params(32, 16, 4).w1 == p.w1);
  }

  TEST_CASE("shape mismatch is a dimension error") {
    const auto p = default_params(8);
    CHECK(kind_of([&] { p.validate(6); }) == ErrorKind::Dimension);
    const FeatureMap x(random_matrix(1, 4, 6));
    CHECK(kind_of([&] { channel_attention(x, p); }) == ErrorKind::Dimension);
  }
}

TEST_SUITE("channel_attention") {
  TEST_CASE("zero weights give 0.5") {
    const FeatureMap x(random_matrix(2, 5, 6));
    for (double v : channel_attention(x, constant_params(6, 16, 0.0))) CHECK(v == 0.5);
  }

  TEST_CASE("large bias saturates near 1") {
    const FeatureMap x(random_matrix(3, 5, 6));
    for (double v : channel_attention(x, constant_params(6, 16, 20.0))) CHECK(std::abs(v - 1.0) < 1e-8);
  }

  TEST_CASE("matches the explicit formula") {
    const Matrix xm = random_matrix(4, 7, 32);
    auto p = default_params(32, 16, 9);
    p.b1 = {0.01, -0.02};
    for (std::size_t i = 0; i < 32; ++i) p.b2[i] = 0.001 * static_cast<double>(i);
    const auto v = channel_attention(FeatureMap(xm), p);
    std::vector<double> mean(32, 0.0);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 32; ++j) mean[j] += xm(i, j) / 7.0;
    for (std::size_t j = 0; j < 32; ++j) {
      double z = p.b2[j];
      for (std::size_t h = 0; h < 2; ++h) {
        double a = p.b1[h];
        for (std::size_t q = 0; q < 32; ++q) a += p.w1(h, q) * mean[q];
        z += p.w2(j, h) * std::max(a, 0.0);
      }
      CHECK(v[j] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-14));
      CHECK(v[j] > 0.0);
      CHECK(v[j] < 1.0);
    }
  }

  TEST_CASE("property: channel permutation equivariance") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t c = 32, k = 2, n = 6;
      const Matrix xm = random_matrix(seed, n, c);
      auto p = default_params(c, 16, seed + 100);
      p.b1 = {0.05, 0.02};
      std::vector<std::size_t> perm(c);
      Rng rng(seed);
      for (std::size_t i = 0; i < c; ++i) perm[i] = i;
      for (std::size_t i = c - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform() * (i + 1))]);
      Matrix xp(n, c);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) xp(i, j) = xm(i, perm[j]);
      AttentionParams pp = p;
      for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t h = 0; h < k; ++h) {
          pp.w1(h, j) = p.w1(h, perm[j]);
          pp.w2(j, h) = p.w2(perm[j], h);
        }
        pp.b2[j] = p.b2[perm[j]];
      }
      const auto v = channel_attention(FeatureMap(xm), p);
      const auto vp = channel_attention(FeatureMap(xp), pp);
      for (std::size_t j = 0; j < c; ++j) CHECK(vp[j] == doctest::Approx(v[perm[j]]).epsilon(1e-14));
    }
  }
}

TEST_SUITE("attention_map") {
  TEST_CASE("examples") {
    CHECK(attention_map({1, 0}).s == Matrix{{1, 0}, {0, 0}});
    CHECK(attention_map({1, 1, 1}).s == Matrix(3, 3, 1.0));
    const auto v = random_unit_vector(5, 7);
    const auto m = attention_map(v);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) CHECK(m.s(i, j) == v[i] * v[j]);
  }

  TEST_CASE("out-of-range values are input errors") {
    CHECK(kind_of([] { attention_map({0.5, 1.5}); }) == ErrorKind::Input);
    CHECK(kind_of([] { attention_map({-0.1}); }) == ErrorKind::Input);
    CHECK(kind_of([] { attention_map({std::nan("")}); }) == ErrorKind::Input);
  }

  TEST_CASE("property: S in [0, 1], symmetric, rank at most one") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto m = attention_map(random_unit_vector(seed, 3 + seed % 12));
      CHECK(m.s == transpose(m.s));
      for (double s : m.s.data()) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
      }
      const auto ev = spectral::eigenvalues(m.s);
      CHECK(std::abs(ev[1]) <= 1e-10);
      CHECK(std::abs(ev.back()) <= 1e-10);
    }
  }
}

TEST_SUITE("sparsity_loss") {
  TEST_CASE("examples") {
    CHECK(sparsity_loss(attention_map({1, 0}), 1.0) == 0.25);
    CHECK(sparsity_loss(attention_map({1, 1, 1, 1}), 1.0) == 1.0);
    CHECK(sparsity_loss(attention_map(random_unit_vector(1, 5)), 0.0) == 0.0);
  }

  TEST_CASE("property: bounded by beta2 and monotone in each entry") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto v = random_unit_vector(seed, 6);
      const double beta2 = 0.1 * static_cast<double>(seed % 11);
      auto m = attention_map(v);
      const double base = sparsity_loss(m, beta2);
      CHECK(base >= 0.0);
      CHECK(base <= beta2);
      const std::size_t i = seed % 6, j = (seed / 6) % 6;
      m.s(i, j) = std::min(1.0, m.s(i, j) + 0.1);
      CHECK(sparsity_loss(m, beta2) >= base);
    }
  }
}
