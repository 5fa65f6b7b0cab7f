#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "momn/solver.hpp"
#include "momn/spectral.hpp"
#include "test_util.hpp"

using namespace momn;
using namespace momn::spectral;
using momn::test::random_symmetric;
using momn::test::rel_frob;

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

void check_decomposition(const Matrix& s, const EigDecomp& e, double tol) {
  const std::size_t c = s.rows();
  CHECK(rel_frob(reconstruct(e, e.eigenvalues), s) < tol);
  CHECK(frobenius_norm(sub(matmul(transpose(e.eigenvectors), e.eigenvectors), Matrix::identity(c))) < 1e-9);
  for (std::size_t i = 1; i < c; ++i) CHECK(e.eigenvalues[i - 1] >= e.eigenvalues[i]);
}

}  // namespace

TEST_SUITE("jacobi_eig") {
  TEST_CASE("diagonal") {
    const auto e = jacobi_eig(Matrix::diag({1, 3}));
    CHECK(e.eigenvalues == std::vector<double>{3, 1});
    CHECK(std::abs(e.eigenvectors(1, 0)) == 1.0);
    CHECK(std::abs(e.eigenvectors(0, 1)) == 1.0);
  }

  TEST_CASE("classic 2x2") {
    const auto e = jacobi_eig(Matrix{{2, 1}, {1, 2}});
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(e.eigenvectors(0, 0)) == doctest::Approx(r).epsilon(1e-14));
    CHECK(e.eigenvectors(0, 0) * e.eigenvectors(1, 0) > 0.0);
    CHECK(e.eigenvectors(0, 1) * e.eigenvectors(1, 1) < 0.0);
  }

  TEST_CASE("random symmetric 8x8 reconstructs") {
    const Matrix s = random_symmetric(3, 8);
    check_decomposition(s, jacobi_eig(s), 1e-10);
  }

  TEST_CASE("property: reconstruction and orthogonality") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const Matrix s = random_symmetric(seed, 1 + seed % 20);
      check_decomposition(s, jacobi_eig(s), 1e-9);
    }
  }

  TEST_CASE("asymmetric input is rejected") {
    CHECK(kind_of([] { jacobi_eig(Matrix{{1, 2}, {0, 1}}); }) == ErrorKind::Input);
  }
}

TEST_SUITE("spectral_sqrt") {
  TEST_CASE("diagonal") {
    CHECK(rel_frob(spectral_sqrt(Matrix::diag({4, 9})), Matrix::diag({2, 3})) < 1e-15);
  }

  TEST_CASE("identity") { CHECK(rel_frob(spectral_sqrt(Matrix::identity(5)), Matrix::identity(5)) < 1e-15); }

  TEST_CASE("multiply back") {
    const Matrix a{{2, 1}, {1, 2}};
    const Matrix r = spectral_sqrt(a);
    CHECK(rel_frob(matmul(r, r), a) < 1e-10);
  }

  TEST_CASE("roundoff negatives are clamped, real negatives rejected") {
    CHECK(spectral_sqrt(Matrix::diag({1, -1e-9}))(1, 1) == 0.0);
    CHECK(kind_of([] { spectral_sqrt(Matrix::diag({1, -1e-3})); }) == ErrorKind::NotPsd);
  }

  TEST_CASE("property: square reproduces A") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto a = bench::synth_spd(seed, 2 + seed % 15, 1e3);
      const Matrix r = spectral_sqrt(a.a);
      CHECK(rel_frob(matmul(r, r), a.a) < 1e-9);
    }
  }
}

TEST_SUITE("soft_threshold") {
  TEST_CASE("examples") {
    CHECK(soft_threshold(Matrix{{0.25}}, 0.1)(0, 0) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(soft_threshold(Matrix{{-0.05}}, 0.1)(0, 0) == 0.0);
    const Matrix m = random_symmetric(1, 4);
    CHECK(soft_threshold(m, 0.0) == m);
    CHECK(kind_of([] { soft_threshold(Matrix{{1}}, -0.1); }) == ErrorKind::Parameter);
  }
}

TEST_SUITE("singular_value_threshold") {
  TEST_CASE("diagonal") {
    const Matrix out = singular_value_threshold(Matrix::diag({1, 0.3, 0.05}), 0.1);
    CHECK(rel_frob(out, Matrix::diag({0.9, 0.2, 0})) < 1e-14);
  }

  TEST_CASE("lam 0 restores a PSD input") {
    const Matrix s = bench::synth_spd(4, 6, 100).a;
    CHECK(rel_frob(singular_value_threshold(s, 0.0), s) < 1e-10);
  }

  TEST_CASE("asymmetric input is rejected") {
    CHECK(kind_of([] { singular_value_threshold(Matrix{{1, 2}, {0, 1}}, 0.1); }) == ErrorKind::Input);
  }

  TEST_CASE("property: rank does not increase") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto a = momn::test::normalized_spd(seed, 10, 100);
      const Matrix t = singular_value_threshold(a.a, 0.05);
      CHECK(approx_rank(t, 1e-12) <= approx_rank(a.a, 1e-12));
    }
  }
}

TEST_SUITE("prox operators") {
  TEST_CASE("property: non-expansive") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const Matrix m1 = random_symmetric(2 * seed, 6);
      const Matrix m2 = random_symmetric(2 * seed + 1, 6);
      const double d = frobenius_norm(sub(m1, m2));
      const double lam = 0.05 * static_cast<double>(seed % 10);
      CHECK(frobenius_norm(sub(soft_threshold(m1, lam), soft_threshold(m2, lam))) <= d * (1 + 1e-12));
      CHECK(frobenius_norm(sub(singular_value_threshold(m1, lam), singular_value_threshold(m2, lam))) <=
            d * (1 + 1e-9));
    }
  }
}

TEST_SUITE("approx_rank") {
  TEST_CASE("examples") {
    CHECK(approx_rank(Matrix::diag({0.5, 0.03, 0.001}), 0.04) == 1);
    const auto a = momn::test::normalized_spd(2, 7, 10);
    CHECK(approx_rank(a.a, 0.0) == 7);
    CHECK(approx_rank(a.a, 2.0) == 0);
    CHECK(kind_of([] { approx_rank(Matrix{{1, 2}, {0, 1}}, 0.1); }) == ErrorKind::Input);
  }

  TEST_CASE("property: non-increasing in tau") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto a = momn::test::normalized_spd(seed, 16, 100);
      int prev = approx_rank(a.a, 0.0);
      for (double tau = 0.005; tau < 0.3; tau += 0.005) {
        const int r = approx_rank(a.a, tau);
        CHECK(r <= prev);
        prev = r;
      }
    }
  }
}

TEST_SUITE("nuclear_norm") {
  TEST_CASE("equals trace for SPD and sum |lambda| otherwise") {
    const auto a = bench::synth_spd(1, 6, 10);
    CHECK(nuclear_norm(a.a) == doctest::Approx(a.trace_pre).epsilon(1e-12));
    CHECK(nuclear_norm(Matrix::diag({1, -2})) == doctest::Approx(3.0).epsilon(1e-15));
  }
}

TEST_SUITE("oracle equivalence") {
  TEST_CASE("property: beta = 0, K = 20 matches spectral_sqrt to 1e-6") {
    SolverConfig cfg;
    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    cfg.k_iters = 20;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const std::size_t c = 2 + 30 * (seed % 2) + seed;
      const auto a = bench::synth_spd(seed, std::min<std::size_t>(c, 32), 1e3);
      const auto r = run(a, cfg, {}, {.telemetry = false});
      CAPTURE(seed);
      CHECK(rel_frob(r.y, spectral_sqrt(a.a)) <= 1e-6);
    }
  }
}
