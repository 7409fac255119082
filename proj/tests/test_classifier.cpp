#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "superlab/classifier.hpp"
#include "superlab/moments.hpp"

using namespace superlab;
using testing::fixture;
using testing::rel_err;

namespace {

SpectralData spec_of(const char* name) { return spectral_decompose(mean_matrix(fixture(name)).B()); }

/// |F / F(0) - v / v(0)|, for comparing directions.
double direction_err(const Eigen::VectorXcd& F, const Eigen::VectorXd& v) {
  const Eigen::VectorXcd a = F / F(0);
  const Eigen::VectorXcd b = v.cast<std::complex<double>>() / v(0);
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("projection onto spectral blocks") {
  SUBCASE("FIX-2, f = (1,-1)") {
    const SpectralData s = spec_of("fix2");
    const auto p = project(Eigen::Vector2cd(1, -1), s);
    REQUIRE(p.size() == 2);
    CHECK(std::abs(p[0].coeffs(0)) < 1e-14);
    // coefficient times the normalized chain reproduces f
    const Eigen::VectorXcd back = p[1].coeffs(0) * s.blocks[1].right.col(0);
    CHECK((back - Eigen::Vector2cd(1, -1)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(p[1].coeffs(0) - 1.0) < 1e-14);  // chain head is (1,-1) after max-modulus normalization
  }
  SUBCASE("f = phi has only the Perron coefficient") {
    for (const char* name : testing::kAllFixtures) {
      const SpectralData s = spec_of(name);
      const auto p = project(s.phi.cast<std::complex<double>>(), s);
      CHECK(std::abs(p[0].coeffs(0) - 1.0) < 1e-12);
      for (std::size_t k = 1; k < p.size(); ++k) CHECK(p[k].coeffs.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("FIX-5, f = (1,-1,0): conjugate pair of coefficients") {
    const SpectralData s = spec_of("fix5");
    const auto p = project(Eigen::Vector3cd(1, -1, 0), s);
    REQUIRE(p.size() == 3);
    CHECK(std::abs(p[0].coeffs(0)) < 1e-14);
    CHECK(std::abs(p[1].coeffs(0)) > 0.1);
    CHECK(p[1].coeffs(0) == std::conj(p[2].coeffs(0)));
  }
  SUBCASE("reconstruction on random f") {
    std::mt19937_64 gen(21);
    for (const char* name : testing::kAllFixtures) {
      const SpectralData s = spec_of(name);
      const Eigen::VectorXd f = testing::random_vector(gen, s.dimension());
      const auto p = project(f.cast<std::complex<double>>(), s);
      Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(s.dimension());
      for (std::size_t k = 0; k < p.size(); ++k) sum += s.blocks[k].right * p[k].coeffs;
      CHECK((sum - f.cast<std::complex<double>>()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("regime classification of the fixtures") {
  const Eigen::Vector2d f(1, -1);
  SUBCASE("FIX-2 small") {
    const Classification c = classify(f, spec_of("fix2"));
    CHECK(c.regime == Regime::Small);
    CHECK(c.alpha == doctest::Approx(0.5));
    CHECK(c.epsilon == doctest::Approx(1.0));
    CHECK(c.gamma == 0);
  }
  SUBCASE("FIX-3 critical") {
    const Classification c = classify(f, spec_of("fix3"));
    CHECK(c.regime == Regime::Critical);
    CHECK(c.alpha == doctest::Approx(1.0));
    CHECK(c.gamma == 0);
    REQUIRE(c.has_fstar);
    CHECK(direction_err(c.fstar.cast<std::complex<double>>(), f) < 1e-12);
  }
  SUBCASE("FIX-4 large") {
    const Classification c = classify(f, spec_of("fix4"));
    CHECK(c.regime == Regime::Large);
    CHECK(c.alpha == doctest::Approx(1.5));
    CHECK(c.epsilon == doctest::Approx(0.5));
    REQUIRE(c.F.size() == 1);
    CHECK(direction_err(c.F[0], f) < 1e-12);
    CHECK(std::abs(c.projections[c.iset[0]].eigenvalue - 1.5) < 1e-12);
  }
  SUBCASE("f = c phi is trivial") {
    for (const char* name : testing::kAllFixtures) {
      const SpectralData s = spec_of(name);
      const Classification c = classify(Eigen::VectorXd(2.5 * s.phi), s);
      CHECK(c.regime == Regime::Trivial);
      CHECK(std::abs(c.mean_coeff - 2.5) < 1e-12);
      CHECK(c.fhat.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("FIX-5 oscillating pair") {
    const Classification c = classify(Eigen::Vector3d(1, -1, 0), spec_of("fix5"));
    CHECK(c.regime == Regime::Critical);
    CHECK(c.iset.size() == 2);
    CHECK_FALSE(c.has_fstar);
  }
  SUBCASE("Jordan chain: gamma = 1") {
    const SpectralData s = spec_of("jordan3");
    const Classification c = classify(Eigen::Vector3d(1, -2, 0.5), s);
    CHECK(c.gamma == 1);
    CHECK(c.alpha == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(c.regime == Regime::Small);  // 1 < lambda1 / 2 = 1.5
  }
  SUBCASE("complex f is classified but flagged") {
    const Classification c = classify(Eigen::Vector2cd(std::complex<double>(1, 1), std::complex<double>(-1, 0)), spec_of("fix2"));
    CHECK_FALSE(c.real_input);
  }
}

TEST_CASE("limit law predictions") {
  SUBCASE("FIX-1, f = phi") {
    const Mechanism m = fixture("fix1");
    const SpectralData s = spec_of("fix1");
    const LimitLawPrediction p = predict(s.phi, m, s, classify(s.phi, s));
    CHECK(p.regime == Regime::Trivial);
    CHECK(p.c_exp == doctest::Approx(0.5));
    CHECK(p.p_pow == 0.0);
    CHECK(p.kind == LimitKind::GaussianMixture);
    CHECK(p.variance == doctest::Approx(1.0));
    CHECK(p.covariance_rate == doctest::Approx(0.5));
  }
  SUBCASE("FIX-2 small") {
    const Mechanism m = fixture("fix2");
    const SpectralData s = spec_of("fix2");
    const Eigen::Vector2d f(1, -1);
    const LimitLawPrediction p = predict(f, m, s, classify(f, s));
    CHECK(p.c_exp == doctest::Approx(0.75));
    CHECK(p.variance == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("FIX-3 critical") {
    const Mechanism m = fixture("fix3");
    const SpectralData s = spec_of("fix3");
    const Eigen::Vector2d f(1, -1);
    const LimitLawPrediction p = predict(f, m, s, classify(f, s));
    CHECK(p.c_exp == doctest::Approx(1.0));
    CHECK(p.p_pow == doctest::Approx(-0.5));
    CHECK(p.kind == LimitKind::GaussianMixture);
    CHECK(p.variance == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("FIX-4 large") {
    const Mechanism m = fixture("fix4");
    const SpectralData s = spec_of("fix4");
    const Eigen::Vector2d f(1, -1);
    const LimitLawPrediction p = predict(f, m, s, classify(f, s));
    CHECK(p.regime == Regime::Large);
    CHECK(p.c_exp == doctest::Approx(-1.5));
    CHECK(p.p_pow == 0.0);
    CHECK(p.kind == LimitKind::L2MartingaleLimit);
    REQUIRE(p.martingales.size() == 1);
    CHECK(std::abs(p.martingales[0].eigenvalue - 1.5) < 1e-12);
    REQUIRE(p.has_secondary);
    CHECK(p.secondary_variance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.secondary_c_exp == doctest::Approx(0.5));
    CHECK(rel_err(p.delta_sq, Eigen::Vector2d(1, 1)) < 1e-12);
  }
}

TEST_CASE("equivariance under scaling and Perron shifts") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::bernoulli_distribution sign(0.5);
  for (const char* name : testing::kAllFixtures) {
    const SpectralData s = spec_of(name);
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::VectorXd f = testing::random_vector(gen, s.dimension());
      const double c = sign(gen) ? u(gen) : -u(gen);
      const double k = u(gen) - 5.0;
      const Classification a = classify(f, s);
      const Classification b = classify(Eigen::VectorXd(c * f + k * s.phi), s);
      CHECK(a.regime == b.regime);
      CHECK(a.gamma == b.gamma);
      CHECK(a.iset == b.iset);
      if (std::isfinite(a.alpha)) CHECK(std::abs(a.alpha - b.alpha) < 1e-12);
      CHECK((b.fhat - c * a.fhat).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, std::abs(c)));
    }
  }
}

TEST_CASE("semigroup consistency diagnostic") {
  SUBCASE("Jordan fixture: residual decays like 1/t") {
    const Mechanism m = fixture("jordan3");
    const SpectralData s = spec_of("jordan3");
    const Classification c = classify(Eigen::Vector3d(1, -2, 0.5), s);
    const double r5 = prop_a_residual(mean_matrix(m).B(), s, c, 5.0);
    const double r10 = prop_a_residual(mean_matrix(m).B(), s, c, 10.0);
    const double r20 = prop_a_residual(mean_matrix(m).B(), s, c, 20.0);
    CHECK(r5 > r10);
    CHECK(r10 > r20);
    CHECK(r10 / r5 == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("trivial f gives 0") {
    const Mechanism m = fixture("fix2");
    const SpectralData s = spec_of("fix2");
    CHECK(prop_a_residual(mean_matrix(m).B(), s, classify(s.phi, s), 5.0) == 0.0);
  }
}

TEST_CASE("factorial") {
  CHECK(factorial(0) == 1.0);
  CHECK(factorial(5) == 120.0);
}
