#pragma once

// Mean semigroup T_t = exp(tB), its Perron eigentriplet, the Jordan spectral
// decomposition with biorthonormal duals, the uniform gauge Delta_t and the
// cumulant (log-Laplace) ODE.

#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "superlab/error.hpp"
#include "superlab/expm.hpp"
#include "superlab/model.hpp"

namespace superlab {

/// T_t f = exp(tB) f for real or complex f.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_semigroup(const Eigen::MatrixXd& B, double t,
                                                                          const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  if (!std::isfinite(t) || t < 0.0) throw PreconditionError("apply_semigroup: t must be finite and >= 0");
  if (f.size() != B.rows()) throw PreconditionError("apply_semigroup: vector length mismatch");
  if (!f.allFinite() || !B.allFinite()) throw PreconditionError("apply_semigroup: non-finite input");
  if (t == 0.0) return f;
  const Eigen::MatrixXd E = expm(t * B);
  return E.cast<Scalar>() * f.derived();
}

struct PerronTriplet {
  double lambda1 = 0.0;
  Eigen::VectorXd phi;       ///< right eigenvector, max_i phi_i = 1
  Eigen::VectorXd phitilde;  ///< left eigenvector, <phi, phitilde> = 1
  bool supercritical = false;
};

/// Principal eigenvalue with positive left/right eigenvectors. Throws
/// SpectralError for a reducible B; lambda1 <= 0 only clears `supercritical`.
PerronTriplet eigen_triplet(const Eigen::MatrixXd& B);

/// One eigenvalue cluster. Columns of `right` are the chain vectors, chain by
/// chain, ordered so that B v_n = lambda v_n + v_{n-1} within each chain.
/// Columns of `dual` satisfy <right_j, dual_l> = sum_i right_ij conj(dual_il) = delta_jl.
struct SpectralBlock {
  std::complex<double> eigenvalue;
  std::vector<int> chain_lengths;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd dual;
  int conjugate = -1;  ///< index of the block with conj(eigenvalue); itself when real
  Eigen::Index offset = 0;  ///< first column in the stacked basis

  int size() const { return static_cast<int>(right.cols()); }
  bool is_real() const { return eigenvalue.imag() == 0.0; }
};

class SpectralData {
 public:
  double lambda1 = 0.0;
  Eigen::VectorXd phi;
  Eigen::VectorXd phitilde;
  std::vector<SpectralBlock> blocks;  ///< block 0 is the Perron block
  double norm_B = 0.0;
  double cluster_tolerance = 0.0;  ///< relative radius used to group eigenvalues

  int dimension() const { return static_cast<int>(phi.size()); }

  /// lambda1 - Re lambda_2; infinity when K = 1.
  double spectral_gap() const;

  /// Stacked coefficients <f, dual_n> over all blocks and chain positions.
  template <typename Derived>
  Eigen::VectorXcd coefficients(const Eigen::MatrixBase<Derived>& f) const {
    return inverse_ * f.derived().template cast<std::complex<double>>();
  }

  /// exp(tB) f evaluated through the Jordan form, O(K^2) per call.
  Eigen::VectorXcd evolve(double t, const Eigen::VectorXcd& f) const;
  Eigen::VectorXd evolve_real(double t, const Eigen::VectorXd& f) const;

  /// exp(tB) applied to the vector with stacked chain coefficients `c`. Zeroing
  /// a block's coefficients removes that component exactly, with no round-off leak.
  Eigen::VectorXcd evolve_coefficients(double t, const Eigen::VectorXcd& c) const;

  /// Sum of the chain expansions; reproduces f.
  Eigen::VectorXcd reconstruct(const Eigen::VectorXcd& coeffs) const { return basis_ * coeffs; }

  const Eigen::MatrixXcd& basis() const { return basis_; }
  const Eigen::MatrixXcd& inverse_basis() const { return inverse_; }

 private:
  friend struct SpectralAccess;
  Eigen::MatrixXcd basis_;
  Eigen::MatrixXcd inverse_;
};

/// Full Jordan decomposition of an irreducible Metzler matrix.
SpectralData spectral_decompose(const Eigen::MatrixXd& B);

/// sup over types x and f in [0,1]^K of |phi_x^{-1} e^{-lambda1 t}(T_t f)_x - <f, phitilde>|.
double delta_t(const SpectralData& spec, const Eigen::MatrixXd& B, double t);

struct CumulantOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  double min_step = 1e-12;
  long max_steps = 10'000'000;
};

struct CumulantSolution {
  Eigen::VectorXd value;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long clamp_events = 0;
};

/// V_t f: solves d/dt v = -psi(v), v(0) = f >= 0, by adaptive Dormand-Prince 5(4).
CumulantSolution solve_cumulant_detailed(const Mechanism& mech, const Eigen::VectorXd& f, double t,
                                         const CumulantOptions& opt = {});

inline Eigen::VectorXd solve_cumulant(const Mechanism& mech, const Eigen::VectorXd& f, double t) {
  return solve_cumulant_detailed(mech, f, t).value;
}

}  // namespace superlab
