#pragma once

// Fluctuation regime of a test function f and the limit law it predicts.
//
// f is expanded on the Jordan chains of B; the leading non-Perron blocks
// (largest real part alpha, largest polynomial degree gamma) decide whether
// the LLN remainder fluctuates at the CLT scale (Small), at the CLT scale with
// a polynomial correction (Critical), or converges to a non-Gaussian
// martingale limit (Large).

#include <complex>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "superlab/model.hpp"
#include "superlab/semigroup.hpp"

namespace superlab {

enum class Regime { Trivial, Small, Critical, Large };

const char* to_string(Regime r);

/// Coefficients of f on one spectral block.
struct BlockProjection {
  int block = 0;
  std::complex<double> eigenvalue;
  Eigen::VectorXcd coeffs;  ///< <f, dual_n>, stacked chain by chain
  std::vector<bool> significant;
  int degree = -1;  ///< largest r with a t^r term in e^{-lambda t}T_t f on this block; -1 if none
};

struct Classification {
  double lambda1 = 0.0;
  std::complex<double> mean_coeff;  ///< <f, phitilde>
  Eigen::VectorXcd fhat;            ///< f - <f, phitilde> phi
  Eigen::VectorXcd fhat_coeffs;     ///< chain coefficients of fhat, Perron entry exactly 0
  std::vector<BlockProjection> projections;  ///< every block, Perron block first
  double alpha = -std::numeric_limits<double>::infinity();
  int gamma = 0;
  std::vector<int> iset;            ///< leading block indices, conjugate-closed
  std::vector<Eigen::VectorXcd> F;  ///< F_j for j in iset, same order
  double epsilon = std::numeric_limits<double>::infinity();
  Regime regime = Regime::Trivial;
  double tolerance = 0.0;  ///< regime boundary tolerance on alpha

  /// Fixed limit shape f* = F/gamma! when iset is a single real block.
  bool has_fstar = false;
  Eigen::VectorXd fstar;
  int r = 0;

  bool real_input = true;
  std::vector<std::string> warnings;
};

/// Coefficients <f, dual_n> for every block and chain position.
std::vector<BlockProjection> project(const Eigen::VectorXcd& f, const SpectralData& spec);

/// Classify f. `tol` < 0 selects the default 1e-9 * max(1, lambda1).
Classification classify(const Eigen::VectorXcd& f, const SpectralData& spec, double tol = -1.0);
template <typename Derived>
  requires std::is_same_v<typename Derived::Scalar, double>
Classification classify(const Eigen::MatrixBase<Derived>& f, const SpectralData& spec, double tol = -1.0) {
  return classify(Eigen::VectorXcd(f.template cast<std::complex<double>>()), spec, tol);
}

enum class LimitKind { GaussianMixture, L2MartingaleLimit, Degenerate };

struct MartingaleTerm {
  std::complex<double> eigenvalue;
  Eigen::VectorXcd F;
};

/// Normalization C(t) = exp(c_exp t) t^p_pow and the law of C(t) * (normalized quantity).
///
/// Trivial, Small and Critical normalize the LLN remainder
/// e^{-lambda1 t}<f,X_t> - <f,phitilde> W_inf; Large normalizes <fhat, X_t>.
struct LimitLawPrediction {
  Regime regime = Regime::Trivial;
  double c_exp = 0.0;
  double p_pow = 0.0;
  std::string normalized_quantity;
  LimitKind kind = LimitKind::Degenerate;
  double variance = 0.0;  ///< GaussianMixture: law is sqrt(variance * W_inf) N

  std::vector<MartingaleTerm> martingales;  ///< Large: W_t = e^{-lambda_j t}<F_j, X_t>

  bool has_secondary = false;
  double secondary_variance = 0.0;  ///< Large: sqrt(v W_inf) N at scale e^{(lambda1/2 - eps) t}
  double secondary_c_exp = 0.0;

  double covariance_rate = 0.0;  ///< Trivial: Cov(G_s, G_t) = exp(-rate |t - s|)

  double sigma_phi_sq = 0.0;
  double rho_f_sq = std::numeric_limits<double>::quiet_NaN();
  double varrho_sq = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd delta_sq;
  std::vector<std::string> notes;
};

/// Requires real f (the limit laws are stated for real test functions).
LimitLawPrediction predict(const Eigen::VectorXd& f, const Mechanism& mech, const SpectralData& spec,
                           const Classification& cls);

/// sup-norm of t^{-gamma} e^{-alpha t} T_t fhat - (gamma!)^{-1} sum_j e^{i t Im lambda_j} F_j,
/// with T_t evaluated by the matrix exponential. Zero for Trivial f.
double prop_a_residual(const Eigen::MatrixXd& B, const SpectralData& spec, const Classification& cls, double t);

double factorial(int n);

}  // namespace superlab
