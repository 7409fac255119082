#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "fixtures.hpp"
#include "superlab/expm.hpp"
#include "superlab/semigroup.hpp"

using namespace superlab;
using testing::fixture;
using testing::rel_err;

namespace {

Eigen::MatrixXd B_of(const char* name) { return mean_matrix(fixture(name)).B(); }

}  // namespace

TEST_CASE("expm against Eigen's MatrixFunctions") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {1, 2, 3, 5, 8}) {
    for (double scale : {1e-3, 0.1, 1.0, 5.0, 30.0}) {
      Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(gen); }) * scale;
      const Eigen::MatrixXd ours = expm(A);
      const Eigen::MatrixXd ref = A.exp();
      CAPTURE(n);
      CAPTURE(scale);
      CHECK(rel_err(ours, ref) < 1e-11);
    }
  }
  // complex argument: exp(i theta) on the diagonal
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(2, 2);
  Z(0, 0) = {0.0, 1.0};
  Z(1, 1) = {0.0, -2.0};
  const Eigen::MatrixXcd E = expm(Z);
  CHECK(std::abs(E(0, 0) - std::exp(std::complex<double>(0, 1))) < 1e-15);
  CHECK(std::abs(E(1, 1) - std::exp(std::complex<double>(0, -2))) < 1e-15);
  CHECK_THROWS_AS(expm(Eigen::MatrixXd::Ones(2, 3)), PreconditionError);
}

TEST_CASE("apply_semigroup") {
  CHECK(apply_semigroup(B_of("fix1"), 1.0, Eigen::VectorXd::Ones(1))(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  const Eigen::Vector2d f(1, -1);
  const Eigen::VectorXd Tf = apply_semigroup(B_of("fix2"), 2.0, f);
  CHECK(rel_err(Tf, Eigen::Vector2d(std::exp(1.0), -std::exp(1.0))) < 1e-14);
  CHECK(apply_semigroup(B_of("fix5"), 0.0, Eigen::Vector3d(1, 2, 3)) == Eigen::Vector3d(1, 2, 3));
  CHECK_THROWS_AS(apply_semigroup(B_of("fix2"), -1.0, f), PreconditionError);
  CHECK_THROWS_AS(apply_semigroup(B_of("fix2"), 1.0, Eigen::Vector3d(1, 2, 3)), PreconditionError);

  SUBCASE("semigroup property") {
    std::mt19937_64 gen(2);
    for (const char* name : testing::kAllFixtures) {
      const Eigen::MatrixXd B = B_of(name);
      for (int rep = 0; rep < 10; ++rep) {
        const Eigen::VectorXd g = testing::random_vector(gen, static_cast<int>(B.rows()));
        const double s = 0.3 + rep * 0.2, t = 1.1;
        CHECK(rel_err(apply_semigroup(B, s + t, g), apply_semigroup(B, s, apply_semigroup(B, t, g))) < 1e-10);
      }
    }
  }
}

TEST_CASE("Perron eigentriplet") {
  SUBCASE("fixture values") {
    PerronTriplet tr = eigen_triplet(B_of("fix2"));
    CHECK(tr.lambda1 == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(rel_err(tr.phi, Eigen::Vector2d(1, 1)) < 1e-14);
    CHECK(rel_err(tr.phitilde, Eigen::Vector2d(0.5, 0.5)) < 1e-14);
    CHECK(tr.supercritical);

    tr = eigen_triplet(B_of("fix1"));
    CHECK(tr.lambda1 == doctest::Approx(1.0));
    CHECK(tr.phi(0) == doctest::Approx(1.0));
    CHECK(tr.phitilde(0) == doctest::Approx(1.0));

    tr = eigen_triplet(B_of("fix5"));
    CHECK(tr.lambda1 == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(rel_err(tr.phi, Eigen::Vector3d::Ones()) < 1e-14);
    CHECK(rel_err(tr.phitilde, Eigen::Vector3d::Constant(1.0 / 3.0)) < 1e-14);
  }
  SUBCASE("eigen-invariance on random f") {
    std::mt19937_64 gen(3);
    for (const char* name : testing::kAllFixtures) {
      const Eigen::MatrixXd B = B_of(name);
      const PerronTriplet tr = eigen_triplet(B);
      CHECK(tr.phi.maxCoeff() == doctest::Approx(1.0));
      CHECK(tr.phi.minCoeff() > 0.0);
      CHECK(tr.phitilde.minCoeff() > 0.0);
      CHECK(tr.phi.dot(tr.phitilde) == doctest::Approx(1.0).epsilon(1e-14));
      for (double t : {0.5, 1.0, 2.0}) {
        const Eigen::VectorXd f = testing::random_vector(gen, static_cast<int>(B.rows()));
        CHECK(rel_err(Eigen::VectorXd(std::exp(-tr.lambda1 * t) * apply_semigroup(B, t, tr.phi)), tr.phi) < 1e-10);
        const double lhs = apply_semigroup(B, t, f).dot(tr.phitilde);
        const double rhs = std::exp(tr.lambda1 * t) * f.dot(tr.phitilde);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
      }
    }
  }
  SUBCASE("refusals") {
    Eigen::Matrix2d reducible;
    reducible << 1, 0, 1, 2;
    CHECK_THROWS_AS(eigen_triplet(reducible), SpectralError);
    Eigen::Matrix2d sub;
    sub << -2, 0.5, 0.5, -2;
    const PerronTriplet tr = eigen_triplet(sub);
    CHECK_FALSE(tr.supercritical);
    CHECK(tr.lambda1 == doctest::Approx(-1.5));
  }
}

TEST_CASE("spectral decomposition") {
  SUBCASE("FIX-3: two simple real blocks") {
    const SpectralData s = spectral_decompose(B_of("fix3"));
    REQUIRE(s.blocks.size() == 2);
    CHECK(s.blocks[0].eigenvalue.real() == doctest::Approx(2.0));
    CHECK(s.blocks[1].eigenvalue.real() == doctest::Approx(1.0));
    for (const auto& b : s.blocks) {
      CHECK(b.chain_lengths == std::vector<int>{1});
      CHECK(b.is_real());
    }
    const Eigen::VectorXcd v = s.blocks[1].right.col(0);
    CHECK(std::abs(v(0) + v(1)) < 1e-14);  // proportional to (1,-1)
    CHECK(s.spectral_gap() == doctest::Approx(1.0));
  }
  SUBCASE("FIX-5: conjugate pair, exact conjugate symmetry") {
    const SpectralData s = spectral_decompose(B_of("fix5"));
    REQUIRE(s.blocks.size() == 3);
    CHECK(std::abs(s.blocks[0].eigenvalue - 3.0) < 1e-13);
    const std::complex<double> w(1.5, std::sqrt(3.0) / 2.0);
    const auto& b1 = s.blocks[1];
    const auto& b2 = s.blocks[2];
    CHECK(std::abs(std::abs(b1.eigenvalue - w) * std::abs(b1.eigenvalue - std::conj(w))) < 1e-12);
    CHECK(b1.eigenvalue == std::conj(b2.eigenvalue));
    CHECK(b1.conjugate == 2);
    CHECK(b2.conjugate == 1);
    CHECK(b1.right == b2.right.conjugate());
    CHECK(b1.dual == b2.dual.conjugate());
    CHECK(s.spectral_gap() == doctest::Approx(1.5));
  }
  SUBCASE("defective subdominant block") {
    const Eigen::MatrixXd B = B_of("jordan3");
    // Metzler with a simple dominant eigenvalue and a Jordan 2-chain at lambda = 1
    CHECK((B - Eigen::Matrix3d(B.diagonal().asDiagonal())).minCoeff() >= 0.0);
    const SpectralData s = spectral_decompose(B);
    REQUIRE(s.blocks.size() == 2);
    CHECK(s.lambda1 == doctest::Approx(3.0).epsilon(1e-12));
    const auto& jb = s.blocks[1];
    CHECK(std::abs(jb.eigenvalue - 1.0) < 1e-8);
    REQUIRE(jb.chain_lengths == std::vector<int>{2});
    const Eigen::MatrixXcd Bc = B.cast<std::complex<double>>();
    const Eigen::VectorXcd v1 = jb.right.col(0), v2 = jb.right.col(1);
    CHECK((Bc * v1 - jb.eigenvalue * v1).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((Bc * v2 - jb.eigenvalue * v2 - v1).cwiseAbs().maxCoeff() < 1e-8);
    // chain head normalized to unit max modulus
    CHECK(v1.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  }
  SUBCASE("biorthonormality and reconstruction on every fixture") {
    std::mt19937_64 gen(4);
    for (const char* name : testing::kAllFixtures) {
      CAPTURE(name);
      const Eigen::MatrixXd B = B_of(name);
      const SpectralData s = spectral_decompose(B);
      const int K = s.dimension();
      CHECK((s.inverse_basis() * s.basis() - Eigen::MatrixXcd::Identity(K, K)).cwiseAbs().maxCoeff() < 1e-10);
      // blocks ordered by strictly decreasing real part, Perron first
      CHECK(s.blocks[0].eigenvalue.real() == doctest::Approx(s.lambda1));
      for (std::size_t k = 1; k < s.blocks.size(); ++k)
        CHECK(s.blocks[k].eigenvalue.real() <= s.blocks[k - 1].eigenvalue.real() + 1e-12);
      // <right_j, dual_l> = delta_jl within each block
      for (const auto& b : s.blocks)
        CHECK((b.dual.adjoint() * b.right - Eigen::MatrixXcd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <
              1e-10);
      for (double t : {0.5, 1.0}) {
        const Eigen::VectorXd f = testing::random_vector(gen, K);
        const Eigen::VectorXd ref = (B * t).exp() * f;
        CHECK(rel_err(s.evolve_real(t, f), ref) < 1e-8);
        CHECK(rel_err(s.reconstruct(s.coefficients(f)), Eigen::VectorXcd(f.cast<std::complex<double>>())) < 1e-9);
      }
    }
  }
  SUBCASE("refusals") {
    Eigen::Matrix2d reducible;
    reducible << 1, 0, 1, 2;
    CHECK_THROWS_AS(spectral_decompose(reducible), SpectralError);
  }
}

TEST_CASE("uniform gauge Delta_t") {
  {
    const Eigen::MatrixXd B = B_of("fix1");
    const SpectralData s = spectral_decompose(B);
    for (double t : {0.5, 3.0}) CHECK(delta_t(s, B, t) < 1e-14);
  }
  const Eigen::MatrixXd B = B_of("fix2");
  const SpectralData s = spectral_decompose(B);
  CHECK(delta_t(s, B, 2.0) == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-12));
  // independent brute force: vertices of [0,1]^2
  for (double t : {0.7, 2.0}) {
    const Eigen::MatrixXd E = (B * t).exp() * std::exp(-1.5 * t);
    double best = 0.0;
    for (int mask = 0; mask < 4; ++mask) {
      const Eigen::Vector2d f(mask & 1, (mask >> 1) & 1);
      const Eigen::Vector2d r = E * f;
      best = std::max(best, (r.array() - f.dot(Eigen::Vector2d(0.5, 0.5))).abs().maxCoeff());
    }
    CHECK(delta_t(s, B, t) == doctest::Approx(best).epsilon(1e-12));
  }
  SUBCASE("non-increasing and vanishing on every fixture") {
    for (const char* name : testing::kAllFixtures) {
      CAPTURE(name);
      const Eigen::MatrixXd Bf = B_of(name);
      const SpectralData sf = spectral_decompose(Bf);
      double prev = std::numeric_limits<double>::infinity();
      for (double t : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        const double d = delta_t(sf, Bf, t);
        CHECK(d <= prev + 1e-15);
        prev = d;
      }
      CHECK(prev < 1e-6);
    }
  }
}
