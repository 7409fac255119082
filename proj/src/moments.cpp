#include "superlab/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace superlab {

namespace {

using cplx = std::complex<double>;

void require_supercritical(const SpectralData& spec, const char* who) {
  if (!(spec.lambda1 > 0.0)) throw PreconditionError(std::string(who) + ": requires lambda1 > 0");
}

/// int_0^t T_{t-s} vartheta[T_s f] ds where f is given by its chain coefficients.
Eigen::VectorXd variance_from_coeffs(const MomentOperators& ops, const SpectralData& spec,
                                     const Eigen::VectorXcd& c, double t, const QuadratureOptions& opt) {
  if (!(t > 0.0)) throw PreconditionError("variance: t must be positive");
  if (c.isZero(0.0)) return Eigen::VectorXd::Zero(c.size());
  auto integrand = [&](double s) -> Eigen::VectorXd {
    const Eigen::VectorXd g = spec.evolve_coefficients(s, c).real();
    return spec.evolve_real(t - s, ops.vartheta(g));
  };
  return integrate(integrand, 0.0, t, opt).value.cwiseMax(0.0);
}

/// Coefficients a_l with |T_s g|_inf <= e^{alpha s} sum_l a_l s^l, from the Jordan form.
std::vector<double> growth_polynomial(const SpectralData& spec, const Eigen::VectorXcd& c) {
  std::vector<double> p;
  for (const auto& blk : spec.blocks) {
    Eigen::Index base = blk.offset;
    for (int len : blk.chain_lengths) {
      for (int n = 0; n < len; ++n) {
        const double vn = blk.right.col(base - blk.offset + n).cwiseAbs().maxCoeff();
        double fact = 1.0;
        for (int l = 0; n + l < len; ++l) {
          if (l > 0) fact *= l;
          if (p.size() <= static_cast<std::size_t>(l)) p.resize(static_cast<std::size_t>(l) + 1, 0.0);
          p[static_cast<std::size_t>(l)] += vn * std::abs(c(base + n + l)) / fact;
        }
      }
      base += len;
    }
  }
  return p;
}

/// int_S^inf q(s) e^{-delta s} ds for the polynomial q with coefficients `q`.
double polynomial_exponential_tail(const std::vector<double>& q, double delta, double S) {
  double total = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] == 0.0) continue;
    // int_S^inf s^k e^{-delta s} ds = e^{-delta S} sum_j k!/j! S^j / delta^{k-j+1}
    double term_sum = 0.0;
    double ratio = 1.0;  // k!/j! for j = k downwards
    for (int j = static_cast<int>(k); j >= 0; --j) {
      term_sum += ratio * std::pow(S, j) / std::pow(delta, static_cast<double>(k) - j + 1);
      ratio *= j;
    }
    total += q[k] * term_sum;
  }
  return total * std::exp(-delta * S);
}

}  // namespace

Eigen::VectorXd variance_from_coefficients(const Mechanism& mech, const SpectralData& spec,
                                           const Eigen::VectorXcd& c, double t, const QuadratureOptions& opt) {
  const MomentOperators ops = mean_matrix(mech);
  if (c.size() != ops.size()) throw PreconditionError("variance_from_coefficients: vector length mismatch");
  return variance_from_coeffs(ops, spec, c, t, opt);
}

Eigen::VectorXd variance_of_functional(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                       double t, const QuadratureOptions& opt) {
  const MomentOperators ops = mean_matrix(mech);
  if (f.size() != ops.size()) throw PreconditionError("variance_of_functional: vector length mismatch");
  return variance_from_coeffs(ops, spec, spec.coefficients(f), t, opt);
}

Eigen::VectorXcd covariance_of_functionals(const Mechanism& mech, const SpectralData& spec,
                                           const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, double t,
                                           const QuadratureOptions& opt) {
  const MomentOperators ops = mean_matrix(mech);
  if (f.size() != ops.size() || g.size() != ops.size())
    throw PreconditionError("covariance_of_functionals: vector length mismatch");
  if (!(t > 0.0)) throw PreconditionError("covariance_of_functionals: t must be positive");
  const Eigen::VectorXcd cf = spec.coefficients(f);
  const Eigen::VectorXcd cg = spec.coefficients(g);
  auto integrand = [&](double s) -> Eigen::VectorXcd {
    return spec.evolve(t - s, ops.vartheta(spec.evolve_coefficients(s, cf), spec.evolve_coefficients(s, cg)));
  };
  return integrate(integrand, 0.0, t, opt).value;
}

Eigen::VectorXd martingale_variance(const Mechanism& mech, const SpectralData& spec, double t) {
  require_supercritical(spec, "martingale_variance");
  if (!(t >= 0.0)) throw PreconditionError("martingale_variance: t must be >= 0");
  const MomentOperators ops = mean_matrix(mech);
  const auto K = ops.size();
  const Eigen::MatrixXd A = 2.0 * spec.lambda1 * Eigen::MatrixXd::Identity(K, K) - ops.B();
  const Eigen::MatrixXd decay = expm(ops.B() * t) * std::exp(-2.0 * spec.lambda1 * t);
  const Eigen::VectorXd v = ops.vartheta(spec.phi);
  return A.partialPivLu().solve(v - decay * v);
}

Eigen::VectorXd martingale_variance_quadrature(const Mechanism& mech, const SpectralData& spec, double t,
                                               const QuadratureOptions& opt) {
  require_supercritical(spec, "martingale_variance_quadrature");
  const MomentOperators ops = mean_matrix(mech);
  const Eigen::VectorXd v = ops.vartheta(spec.phi);
  if (t == 0.0) return Eigen::VectorXd::Zero(v.size());
  auto integrand = [&](double s) -> Eigen::VectorXd {
    return std::exp(-2.0 * spec.lambda1 * s) * spec.evolve_real(s, v);
  };
  return integrate(integrand, 0.0, t, opt).value;
}

Eigen::VectorXd big_theta(const Mechanism& mech, const SpectralData& spec) {
  require_supercritical(spec, "big_theta");
  const MomentOperators ops = mean_matrix(mech);
  const auto K = ops.size();
  const Eigen::MatrixXd A = 2.0 * spec.lambda1 * Eigen::MatrixXd::Identity(K, K) - ops.B();
  return A.partialPivLu().solve(ops.vartheta(spec.phi));
}

double sigma_phi_sq(const Mechanism& mech, const SpectralData& spec) {
  require_supercritical(spec, "sigma_phi_sq");
  const MomentOperators ops = mean_matrix(mech);
  return ops.vartheta(spec.phi).dot(spec.phitilde) / spec.lambda1;
}

double theta_bound_constant(const Mechanism& mech, const SpectralData& spec) {
  require_supercritical(spec, "theta_bound_constant");
  const MomentOperators ops = mean_matrix(mech);
  const double ratio = ops.vartheta(spec.phi).cwiseQuotient(spec.phi).maxCoeff();
  double sup_delta = 0.0;
  const double gap = std::isfinite(spec.spectral_gap()) ? spec.spectral_gap() : spec.lambda1;
  for (double t = 1e-9; t <= 64.0 / gap; t *= 2.0) sup_delta = std::max(sup_delta, delta_t(spec, ops.B(), t));
  return std::max(ratio, 0.0) * (sup_delta + spec.phitilde.sum()) / spec.lambda1;
}

double rho_fluctuation_part(const Mechanism& mech, const SpectralData& spec, const Classification& cls) {
  require_supercritical(spec, "rho_f_sq");
  if (cls.regime == Regime::Trivial) return 0.0;
  if (cls.regime != Regime::Small)
    throw PreconditionError(std::string("rho_f_sq: requires the Small regime, f is ") + to_string(cls.regime));
  if (!cls.real_input) throw PreconditionError("rho_f_sq: requires real f");
  const MomentOperators ops = mean_matrix(mech);
  const Eigen::VectorXcd& c = cls.fhat_coeffs;
  const double delta = spec.lambda1 - 2.0 * cls.alpha;

  auto integrand = [&](double s) -> double {
    const Eigen::VectorXd g = (std::exp(-cls.alpha * s) * spec.evolve_coefficients(s, c)).real();
    // e^{-lambda1 s} <vartheta[T_s fhat], phitilde> = e^{-delta s} <vartheta[e^{-alpha s} T_s fhat], phitilde>
    return std::exp(-delta * s) * ops.vartheta(g).dot(spec.phitilde);
  };

  // tail: integrand <= |vartheta| <1,phitilde> P(s)^2 e^{-delta s}
  const std::vector<double> p = growth_polynomial(spec, c);
  std::vector<double> q(2 * p.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) q[i + j] += p[i] * p[j];
  const double C = ops.vartheta_norm() * spec.phitilde.sum();
  for (double& v : q) v *= C;

  QuadratureOptions opt;
  opt.rel_tol = 1e-10;
  double S = 10.0 / delta;
  double head = integrate(integrand, 0.0, S, opt).value;
  for (int iter = 0; iter < 60; ++iter) {
    const double tail = polynomial_exponential_tail(q, delta, S);
    if (tail < 1e-9 * std::max(std::abs(head), 1e-300) || tail < 1e-300) return head;
    head += integrate(integrand, S, 2.0 * S, opt).value;
    S *= 2.0;
  }
  throw QuadratureError("rho_f_sq: tail bound not certified", head, polynomial_exponential_tail(q, delta, S));
}

double rho_f_sq(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f) {
  const Classification cls = classify(f, spec);
  const double m = cls.mean_coeff.real();
  return rho_fluctuation_part(mech, spec, cls) + m * m * sigma_phi_sq(mech, spec);
}

double varrho_sq(const Mechanism& mech, const SpectralData& spec, const Classification& cls) {
  if (cls.regime != Regime::Critical && cls.regime != Regime::Large)
    throw PreconditionError(std::string("varrho_sq: requires the Critical or Large regime, f is ") +
                            to_string(cls.regime));
  const MomentOperators ops = mean_matrix(mech);
  cplx sum = 0.0;
  for (const auto& F : cls.F) sum += ops.vartheta(F, Eigen::VectorXcd(F.conjugate())).dot(spec.phitilde.cast<cplx>());
  const double g = factorial(cls.gamma);
  return std::max(sum.real(), 0.0) / (g * g);
}

Eigen::VectorXd delta_sq(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& g, double eps) {
  if (!(eps >= 0.0) || !(eps < spec.lambda1 / 2.0)) {
    std::ostringstream os;
    os << "delta_sq: requires 0 <= eps < lambda1/2 = " << spec.lambda1 / 2.0 << ", got eps = " << eps;
    throw PreconditionError(os.str());
  }
  const MomentOperators ops = mean_matrix(mech);
  const auto K = ops.size();
  const Eigen::MatrixXd A = 2.0 * (spec.lambda1 - eps) * Eigen::MatrixXd::Identity(K, K) - ops.B();
  return A.partialPivLu().solve(ops.vartheta(g));
}

Eigen::VectorXd large_variance_limit(const Mechanism& mech, const SpectralData& spec, const Classification& cls,
                                     double t) {
  if (cls.regime != Regime::Large)
    throw PreconditionError(std::string("large_variance_limit: requires the Large regime, f is ") +
                            to_string(cls.regime));
  const MomentOperators ops = mean_matrix(mech);
  const auto K = ops.size();
  const Eigen::MatrixXcd Bc = ops.B().cast<cplx>();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(K);
  for (std::size_t j = 0; j < cls.iset.size(); ++j) {
    const cplx lj = spec.blocks[static_cast<std::size_t>(cls.iset[j])].eigenvalue;
    for (std::size_t l = 0; l < cls.iset.size(); ++l) {
      const cplx ll = spec.blocks[static_cast<std::size_t>(cls.iset[l])].eigenvalue;
      const Eigen::MatrixXcd A = (lj + ll) * Eigen::MatrixXcd::Identity(K, K) - Bc;
      const Eigen::VectorXcd R = A.partialPivLu().solve(ops.vartheta(cls.F[j], cls.F[l]));
      acc += std::exp(cplx(0.0, t * (lj.imag() + ll.imag()))) * R;
    }
  }
  const double g = factorial(cls.gamma);
  return acc.real() / (g * g);
}

AsymptoteTable variance_asymptote(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                  const Classification& cls, const std::vector<double>& t_grid) {
  const MomentOperators ops = mean_matrix(mech);
  AsymptoteTable table;
  table.regime = cls.regime;
  const double l1 = spec.lambda1;
  const int K = ops.size();

  Eigen::VectorXd limit_const;
  switch (cls.regime) {
    case Regime::Trivial: {
      table.scaling = "exp(-2 lambda1 t) Var<f,X_t>, limit <f,phitilde>^2 Theta";
      const double m = cls.mean_coeff.real();
      limit_const = m * m * big_theta(mech, spec);
      break;
    }
    case Regime::Small:
      table.scaling = "exp(-lambda1 t) Var<fhat,X_t> / phi, limit rho^2_fhat";
      limit_const = Eigen::VectorXd::Constant(K, rho_fluctuation_part(mech, spec, cls));
      break;
    case Regime::Critical:
      table.scaling = "t^-(1+2 gamma) exp(-lambda1 t) Var<fhat,X_t> / phi, limit varrho^2/(1+2 gamma)";
      limit_const = Eigen::VectorXd::Constant(K, varrho_sq(mech, spec, cls) / (1.0 + 2.0 * cls.gamma));
      break;
    case Regime::Large:
      table.scaling = "t^-2gamma exp(-2 alpha t) Var<fhat,X_t>, limit sum of resolvents over the leading blocks";
      break;
  }

  for (double t : t_grid) {
    AsymptoteRow row;
    row.t = t;
    Eigen::VectorXd var;
    if (cls.regime == Regime::Trivial) {
      var = variance_from_coeffs(ops, spec, spec.coefficients(f), t, {});
    } else {
      var = variance_from_coeffs(ops, spec, cls.fhat_coeffs, t, {});
    }
    switch (cls.regime) {
      case Regime::Trivial:
        row.scaled = std::exp(-2.0 * l1 * t) * var;
        row.predicted = limit_const;
        break;
      case Regime::Small:
        row.scaled = std::exp(-l1 * t) * var.cwiseQuotient(spec.phi);
        row.predicted = limit_const;
        break;
      case Regime::Critical:
        row.scaled = std::pow(t, -(1.0 + 2.0 * cls.gamma)) * std::exp(-l1 * t) * var.cwiseQuotient(spec.phi);
        row.predicted = limit_const;
        break;
      case Regime::Large:
        row.scaled = std::pow(t, -2.0 * cls.gamma) * std::exp(-2.0 * cls.alpha * t) * var;
        row.predicted = large_variance_limit(mech, spec, cls, t);
        break;
    }
    const double scale = std::max(row.predicted.cwiseAbs().maxCoeff(), 1e-300);
    row.deviation = (row.scaled - row.predicted).cwiseAbs().maxCoeff() / scale;
    if (!table.rows.empty() && row.deviation > table.rows.back().deviation * (1.0 + 1e-9) + 1e-12)
      table.decreasing = false;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace superlab
