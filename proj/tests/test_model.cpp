#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "superlab/model.hpp"
#include "superlab/model_io.hpp"

using namespace superlab;
using testing::fixture;

namespace {

const CheckResult* find_check(const ValidationReport& rep, const std::string& name) {
  for (const auto& c : rep.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("mean matrix of the fixtures") {
  CHECK(mean_matrix(fixture("fix1")).B()(0, 0) == doctest::Approx(1.0));

  Eigen::MatrixXd expected(2, 2);
  expected << 1.0, 0.5, 0.5, 1.0;
  CHECK(mean_matrix(fixture("fix2")).B().isApprox(expected, 1e-15));

  // 2I + cyclic permutation
  Eigen::MatrixXd cyc = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  cyc(0, 1) = cyc(1, 2) = cyc(2, 0) = 1.0;
  CHECK(mean_matrix(fixture("fix5")).B().isApprox(cyc, 1e-15));
}

TEST_CASE("validation report") {
  SUBCASE("FIX-1 passes with a positive lambda1") {
    const ValidationReport rep = validate(fixture("fix1"));
    CHECK(rep.ok());
    CHECK(rep.structural_ok);
    CHECK(rep.supercritical);
    CHECK(rep.lambda1 == doctest::Approx(1.0));
    CHECK(rep.min_b_positive);
  }
  SUBCASE("FIX-6 is structurally fine but flags min b = 0") {
    const ValidationReport rep = validate(fixture("fix6"));
    CHECK(rep.structural_ok);
    CHECK(rep.ok());
    CHECK_FALSE(rep.min_b_positive);
    const CheckResult* c = find_check(rep, "min b > 0");
    REQUIRE(c);
    CHECK_FALSE(c->passed);
    CHECK_FALSE(c->hard);
  }
  SUBCASE("nonzero eta diagonal is a hard failure") {
    Mechanism m = fixture("fix2");
    m.eta(0, 0) = 0.3;
    const ValidationReport rep = validate(m);
    CHECK_FALSE(rep.structural_ok);
    CHECK_FALSE(rep.ok());
    const CheckResult* c = find_check(rep, "zero eta diagonal");
    REQUIRE(c);
    CHECK_FALSE(c->passed);
    CHECK(c->hard);
    CHECK_THROWS_AS(require_structurally_valid(m), ModelError);
  }
  SUBCASE("negative b and negative eta") {
    Mechanism m = fixture("fix2");
    m.b(1) = -0.1;
    m.eta(0, 1) = -0.2;
    const ValidationReport rep = validate(m);
    CHECK_FALSE(find_check(rep, "nonnegative b")->passed);
    CHECK_FALSE(find_check(rep, "nonnegative eta")->passed);
  }
  SUBCASE("reducible and subcritical mechanisms are flagged, not rejected") {
    Mechanism m = fixture("fix2");
    m.eta(0, 1) = 0.0;
    ValidationReport rep = validate(m);
    CHECK(rep.structural_ok);
    CHECK_FALSE(rep.irreducible);
    CHECK_FALSE(rep.ok());

    Mechanism s = fixture("fix1");
    s.a(0) = 0.5;
    rep = validate(s);
    CHECK(rep.structural_ok);
    CHECK_FALSE(rep.supercritical);
    CHECK(rep.lambda1 == doctest::Approx(-0.5));
  }
  SUBCASE("non-finite coefficients") {
    Mechanism m = fixture("fix1");
    m.a(0) = std::nan("");
    CHECK_FALSE(validate(m).structural_ok);
  }
}

TEST_CASE("vartheta") {
  const MomentOperators ops2 = mean_matrix(fixture("fix2"));
  CHECK(ops2.vartheta(Eigen::Vector2d(1, 1)).isApprox(Eigen::Vector2d(1, 1)));
  CHECK(ops2.vartheta(Eigen::Vector2d::Zero()).isZero(0.0));

  const MomentOperators ops6 = mean_matrix(fixture("fix6"));
  CHECK(ops6.vartheta(Eigen::VectorXd::Ones(1))(0) == doctest::Approx(0.5));

  SUBCASE("bilinear and symmetric, without conjugation") {
    const Mechanism m = fixture("jordan3");
    const MomentOperators ops = mean_matrix(m);
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::VectorXd f = testing::random_vector(gen, 3);
      const Eigen::VectorXd g = testing::random_vector(gen, 3);
      const Eigen::VectorXd h = testing::random_vector(gen, 3);
      const double c = 1.7;
      CHECK(testing::rel_err(ops.vartheta(f, g), ops.vartheta(g, f), 1.0) < 1e-14);
      CHECK(testing::rel_err(ops.vartheta(Eigen::VectorXd(c * f + h), g),
                             Eigen::VectorXd(c * ops.vartheta(f, g) + ops.vartheta(h, g)), 1.0) < 1e-13);
      const Eigen::VectorXcd fi = std::complex<double>(0, 1) * f.cast<std::complex<double>>();
      CHECK(testing::rel_err(ops.vartheta(fi, fi), Eigen::VectorXcd(-ops.vartheta(f).cast<std::complex<double>>()),
                             1.0) < 1e-14);
      // |vartheta[f]| <= c |f|_inf^2
      CHECK(ops.vartheta(f).cwiseAbs().maxCoeff() <= ops.vartheta_norm() * std::pow(f.cwiseAbs().maxCoeff(), 2) + 1e-14);
    }
  }
  CHECK_THROWS_AS(ops2.vartheta(Eigen::Vector3d(1, 1, 1)), PreconditionError);
}

TEST_CASE("psi") {
  const Mechanism m = fixture("jordan3");
  CHECK(psi(m, Eigen::Vector3d::Zero()).isZero(0.0));
  // the linear part of psi is -B u
  const Eigen::MatrixXd B = mean_matrix(m).B();
  const double h = 1e-7;
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd u = h * Eigen::VectorXd::Unit(3, j);
    CHECK(testing::rel_err(Eigen::VectorXd(psi(m, u) / h), Eigen::VectorXd(-B.col(j)), 1.0) < 1e-6);
  }
  // FIX-1: psi(u) = -u + 0.5 u^2
  CHECK(psi(fixture("fix1"), Eigen::VectorXd::Constant(1, 2.0))(0) == doctest::Approx(0.0));
  CHECK(psi(fixture("fix1"), Eigen::VectorXd::Constant(1, 3.0))(0) == doctest::Approx(1.5));
}

TEST_CASE("irreducibility") {
  Eigen::Matrix3d M;
  M << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  CHECK(is_irreducible(M));
  M(2, 0) = 0.0;
  CHECK_FALSE(is_irreducible(M));
  CHECK(is_irreducible(Eigen::MatrixXd::Zero(1, 1)));
}

TEST_CASE("model parsing") {
  const std::string good = R"({"types": 2, "a": [-1, -1], "b": [0.5, 0.5], "eta": [[0, 0.5], [0.5, 0]],
                              "jumps": [{"type": 2, "rate": 0.3, "vector": [0.1, 0.2]}]})";
  const Mechanism m = parse_mechanism(good);
  CHECK(m.K == 2);
  REQUIRE(m.jumps.size() == 2);
  CHECK(m.jumps[0].empty());
  REQUIRE(m.jumps[1].size() == 1);
  CHECK(m.jumps[1][0].rate == 0.3);
  CHECK(m.jumps[1][0].size(1) == 0.2);

  CHECK_THROWS_AS(parse_mechanism(R"({"types": 1, "a": [-1], "b": [0.5], "eta": [[0]], "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_mechanism(R"({"types": 2, "a": [-1], "b": [0.5, 0.5], "eta": [[0, 1], [1, 0]]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_mechanism("not json"), ConfigError);
  CHECK_THROWS_AS(parse_mechanism(R"({"types": 1, "a": [-1], "b": [0.5], "eta": [[0]],
                                      "jumps": [{"type": 2, "rate": 1, "vector": [1]}]})"),
                  ConfigError);
  CHECK_THROWS_AS(load_mechanism("/nonexistent/model.json"), ConfigError);
}

TEST_CASE("fnv1a hash") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}
