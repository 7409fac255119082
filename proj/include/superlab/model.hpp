#pragma once

// Finite-type branching mechanisms and their first/second moment operators.
//
// A K-type mechanism acts on u in [0,inf)^K as
//
//   psi(i,u) = a_i u_i + b_i u_i^2 - u.eta_i + sum_k g_ik (exp(-u.y_ik) - 1 + u.y_ik)
//
// where the jump measure of type i is the finite atom list {(g_ik, y_ik)}.

#include <complex>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "superlab/error.hpp"

namespace superlab {

struct JumpAtom {
  double rate = 0.0;      ///< g_ik, 1/(mass*time)
  Eigen::VectorXd size;   ///< y_ik, mass per type
};

struct Mechanism {
  int K = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd eta;
  std::vector<std::vector<JumpAtom>> jumps;  ///< jumps[i] = atoms of type i

  static Mechanism zeros(int K);
};

struct CheckResult {
  std::string name;
  bool passed = true;
  bool hard = true;  ///< hard failures make the mechanism unusable
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool structural_ok = true;
  bool irreducible = false;
  bool supercritical = false;
  double lambda1 = 0.0;  ///< max real part of spec(B); NaN when structure failed
  bool min_b_positive = false;
  bool fourth_moment_finite = true;

  bool ok() const { return structural_ok && irreducible && supercritical; }
};

/// Structural checks are hard failures, irreducibility and supercriticality are flags.
ValidationReport validate(const Mechanism& mech);

/// Throws ModelError listing every hard failure.
void require_structurally_valid(const Mechanism& mech);

/// Mean generator and second-moment data: T_t = exp(tB), vartheta[f,g].
class MomentOperators {
 public:
  explicit MomentOperators(const Mechanism& mech);

  const Eigen::MatrixXd& B() const { return B_; }
  int size() const { return static_cast<int>(B_.rows()); }

  /// vartheta[f,g](i) = 2 b_i f_i g_i + sum_k g_ik (f.y_ik)(g.y_ik). Bilinear, no conjugation.
  template <typename DerivedF, typename DerivedG>
  auto vartheta(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedG>& g) const {
    using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedF::Scalar,
                                                        typename DerivedG::Scalar>::ReturnType;
    if (f.size() != size() || g.size() != size())
      throw PreconditionError("vartheta: vector length does not match number of types");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        (two_b_.cast<Scalar>().array() * f.derived().template cast<Scalar>().array() *
         g.derived().template cast<Scalar>().array())
            .matrix();
    if (atom_sizes_.cols() > 0) {
      // (f.y)(g.y) per atom, weighted by rate and accumulated on the owner type.
      const auto fy = (atom_sizes_.transpose().cast<Scalar>() * f.derived().template cast<Scalar>()).eval();
      const auto gy = (atom_sizes_.transpose().cast<Scalar>() * g.derived().template cast<Scalar>()).eval();
      for (Eigen::Index k = 0; k < atom_sizes_.cols(); ++k)
        out(atom_owner_[static_cast<std::size_t>(k)]) += Scalar(atom_rates_(k)) * fy(k) * gy(k);
    }
    return out;
  }

  template <typename DerivedF>
  auto vartheta(const Eigen::MatrixBase<DerivedF>& f) const {
    return vartheta(f, f);
  }

  /// Bound c with |vartheta[f]|_inf <= c |f|_inf^2.
  double vartheta_norm() const;

 private:
  Eigen::MatrixXd B_;
  Eigen::VectorXd two_b_;
  Eigen::MatrixXd atom_sizes_;  ///< K x n_atoms
  Eigen::VectorXd atom_rates_;
  std::vector<int> atom_owner_;
};

/// B = -diag(a) + eta. Requires a structurally valid mechanism.
MomentOperators mean_matrix(const Mechanism& mech);

/// vartheta[f,g] for a mechanism, see MomentOperators::vartheta.
template <typename DerivedF, typename DerivedG>
auto vartheta(const Mechanism& mech, const Eigen::MatrixBase<DerivedF>& f,
              const Eigen::MatrixBase<DerivedG>& g) {
  return MomentOperators(mech).vartheta(f, g);
}

/// Branching mechanism psi(., u) for u >= 0.
Eigen::VectorXd psi(const Mechanism& mech, const Eigen::VectorXd& u);

/// Strong connectivity of the graph {i -> j : M_ij > 0, i != j}.
bool is_irreducible(const Eigen::MatrixXd& M);

}  // namespace superlab
