#pragma once

// Second-moment quantities and limit constants. Variances are returned as
// K-vectors indexed by the starting type x (initial state delta_x).

#include <vector>

#include <Eigen/Dense>

#include "superlab/classifier.hpp"
#include "superlab/model.hpp"
#include "superlab/quadrature.hpp"
#include "superlab/semigroup.hpp"

namespace superlab {

/// Var_{delta_x}<f, X_t> = int_0^t T_{t-s} vartheta[T_s f] ds, for every x.
Eigen::VectorXd variance_of_functional(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                       double t, const QuadratureOptions& opt = {});

/// Same, for the function with stacked chain coefficients `c` (see SpectralData::evolve_coefficients).
Eigen::VectorXd variance_from_coefficients(const Mechanism& mech, const SpectralData& spec,
                                           const Eigen::VectorXcd& c, double t, const QuadratureOptions& opt = {});

/// Cov_{delta_x}(<f,X_t>, <g,X_t>) for complex f, g (bilinear, no conjugation).
Eigen::VectorXcd covariance_of_functionals(const Mechanism& mech, const SpectralData& spec,
                                           const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, double t,
                                           const QuadratureOptions& opt = {});

/// Var_{delta_x}[W_t] = int_0^t e^{-2 lambda1 s} T_s vartheta[phi] ds, in closed resolvent form.
Eigen::VectorXd martingale_variance(const Mechanism& mech, const SpectralData& spec, double t);

/// Same integral by adaptive quadrature.
Eigen::VectorXd martingale_variance_quadrature(const Mechanism& mech, const SpectralData& spec, double t,
                                               const QuadratureOptions& opt = {});

/// Theta = (2 lambda1 I - B)^{-1} vartheta[phi].
Eigen::VectorXd big_theta(const Mechanism& mech, const SpectralData& spec);

/// sigma^2_phi = <vartheta[phi], phitilde> / lambda1.
double sigma_phi_sq(const Mechanism& mech, const SpectralData& spec);

/// c with Theta <= c phi: |vartheta[phi]/phi|_inf (sup_t Delta_t + <1, phitilde>) / lambda1.
double theta_bound_constant(const Mechanism& mech, const SpectralData& spec);

/// rho^2_f. Refuses f outside the Small and Trivial regimes.
double rho_f_sq(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f);

/// Integral part of rho^2_f alone (the limit of e^{-lambda1 t} Var<fhat, X_t> / phi).
double rho_fluctuation_part(const Mechanism& mech, const SpectralData& spec, const Classification& cls);

/// (gamma!)^{-2} sum_{j in iset} <vartheta[F_j, conj F_j], phitilde>. Requires Critical or Large.
double varrho_sq(const Mechanism& mech, const SpectralData& spec, const Classification& cls);

/// (2(lambda1 - eps) I - B)^{-1} vartheta[g]. Refuses eps outside [0, lambda1/2).
Eigen::VectorXd delta_sq(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& g, double eps);

/// Large regime: limit of t^{-2 gamma} e^{-2 alpha t} Var_{delta_x}<fhat, X_t> at time t,
/// (gamma!)^{-2} sum_{j,l} e^{i t (Im lambda_j + Im lambda_l)} ((lambda_j + lambda_l) I - B)^{-1} vartheta[F_j, F_l].
Eigen::VectorXd large_variance_limit(const Mechanism& mech, const SpectralData& spec, const Classification& cls,
                                     double t);

struct AsymptoteRow {
  double t = 0.0;
  Eigen::VectorXd scaled;     ///< regime-scaled variance per starting type
  Eigen::VectorXd predicted;  ///< its limit per starting type
  double deviation = 0.0;     ///< max_x |scaled - predicted| / max(|predicted|_inf, tiny)
};

struct AsymptoteTable {
  Regime regime = Regime::Trivial;
  std::string scaling;  ///< human-readable description of the scaling
  std::vector<AsymptoteRow> rows;
  bool decreasing = true;
};

/// Regime-scaled Var<fhat, X_t> (Var<f, X_t> for Trivial f) against its limit on a time grid.
AsymptoteTable variance_asymptote(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                  const Classification& cls, const std::vector<double>& t_grid);

}  // namespace superlab
