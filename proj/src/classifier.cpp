#include "superlab/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superlab/moments.hpp"

namespace superlab {

namespace {

using cplx = std::complex<double>;

constexpr double kProjectionThreshold = 1e-10;

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Trivial: return "Trivial";
    case Regime::Small: return "Small";
    case Regime::Critical: return "Critical";
    case Regime::Large: return "Large";
  }
  return "?";
}

double factorial(int n) {
  double out = 1.0;
  for (int k = 2; k <= n; ++k) out *= k;
  return out;
}

std::vector<BlockProjection> project(const Eigen::VectorXcd& f, const SpectralData& spec) {
  if (f.size() != spec.dimension()) throw PreconditionError("project: vector length mismatch");
  const Eigen::VectorXcd c = spec.inverse_basis() * f;
  const double fnorm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  std::vector<BlockProjection> out;
  for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
    const auto& blk = spec.blocks[k];
    BlockProjection p;
    p.block = static_cast<int>(k);
    p.eigenvalue = blk.eigenvalue;
    p.coeffs = c.segment(blk.offset, blk.size());
    p.significant.resize(static_cast<std::size_t>(blk.size()));
    int base = 0;
    for (int len : blk.chain_lengths) {
      for (int n = 0; n < len; ++n) {
        const double dual_norm = blk.dual.col(base + n).cwiseAbs().maxCoeff();
        const bool sig = std::abs(p.coeffs(base + n)) > kProjectionThreshold * fnorm * dual_norm;
        p.significant[static_cast<std::size_t>(base + n)] = sig;
        if (sig) p.degree = std::max(p.degree, n);
      }
      base += len;
    }
    out.push_back(std::move(p));
  }
  return out;
}

Classification classify(const Eigen::VectorXcd& f, const SpectralData& spec, double tol) {
  if (f.size() != spec.dimension()) throw PreconditionError("classify: vector length mismatch");
  if (!f.allFinite()) throw PreconditionError("classify: non-finite entry in f");
  Classification cls;
  cls.lambda1 = spec.lambda1;
  cls.tolerance = tol >= 0.0 ? tol : 1e-9 * std::max(1.0, spec.lambda1);
  cls.real_input = f.imag().isZero(0.0);
  cls.mean_coeff = (f.array() * spec.phitilde.cast<cplx>().array()).sum();
  cls.fhat = f - cls.mean_coeff * spec.phi.cast<cplx>();
  cls.projections = project(f, spec);

  cls.fhat_coeffs = Eigen::VectorXcd::Zero(f.size());
  for (std::size_t k = 1; k < spec.blocks.size(); ++k) {
    const auto& p = cls.projections[k];
    for (Eigen::Index n = 0; n < p.coeffs.size(); ++n)
      if (p.significant[static_cast<std::size_t>(n)]) cls.fhat_coeffs(spec.blocks[k].offset + n) = p.coeffs(n);
  }

  std::vector<std::size_t> active;
  for (std::size_t k = 1; k < spec.blocks.size(); ++k)
    if (cls.projections[k].degree >= 0) active.push_back(k);
  if (active.empty()) {
    cls.regime = Regime::Trivial;
    return cls;
  }
  cls.alpha = -std::numeric_limits<double>::infinity();
  for (auto k : active) cls.alpha = std::max(cls.alpha, spec.blocks[k].eigenvalue.real());

  std::vector<std::size_t> leading;
  for (auto k : active)
    if (std::abs(spec.blocks[k].eigenvalue.real() - cls.alpha) <= cls.tolerance) leading.push_back(k);
  cls.gamma = 0;
  for (auto k : leading) cls.gamma = std::max(cls.gamma, cls.projections[k].degree);
  for (auto k : leading) {
    if (cls.projections[k].degree != cls.gamma) continue;
    const auto& blk = spec.blocks[k];
    Eigen::VectorXcd F = Eigen::VectorXcd::Zero(f.size());
    int base = 0;
    for (int len : blk.chain_lengths) {
      if (len > cls.gamma) F += blk.right.col(base) * cls.projections[k].coeffs(base + cls.gamma);
      base += len;
    }
    cls.iset.push_back(static_cast<int>(k));
    cls.F.push_back(std::move(F));
  }

  cls.epsilon = spec.lambda1 - cls.alpha;
  const double half = spec.lambda1 / 2.0;
  if (cls.alpha < half - cls.tolerance)
    cls.regime = Regime::Small;
  else if (cls.alpha > half + cls.tolerance)
    cls.regime = Regime::Large;
  else
    cls.regime = Regime::Critical;

  if (cls.iset.size() == 1 && spec.blocks[static_cast<std::size_t>(cls.iset[0])].is_real()) {
    cls.has_fstar = true;
    cls.r = cls.gamma;
    cls.fstar = cls.F[0].real() / factorial(cls.gamma);
  }

  // conditioning diagnostics
  if (cls.regime != Regime::Critical && std::abs(cls.alpha - half) <= 1e3 * cls.tolerance) {
    std::ostringstream os;
    os << "alpha = " << cls.alpha << " is within " << std::abs(cls.alpha - half)
       << " of lambda1/2; classification is ill-conditioned";
    cls.warnings.push_back(os.str());
  }
  const double fnorm = f.cwiseAbs().maxCoeff();
  for (std::size_t k = 1; k < spec.blocks.size(); ++k) {
    const auto& p = cls.projections[k];
    for (Eigen::Index n = 0; n < p.coeffs.size(); ++n) {
      const double thr = kProjectionThreshold * fnorm * spec.blocks[k].dual.col(n).cwiseAbs().maxCoeff();
      const double mag = std::abs(p.coeffs(n));
      if (mag > 1e-3 * thr && mag < 1e3 * thr) {
        std::ostringstream os;
        os << "coefficient " << n + 1 << " on block " << k + 1 << " (eigenvalue " << p.eigenvalue
           << ") is within three decades of the significance threshold";
        cls.warnings.push_back(os.str());
      }
    }
  }
  bool closed = true;
  for (int j : cls.iset) {
    const int partner = spec.blocks[static_cast<std::size_t>(j)].conjugate;
    if (std::find(cls.iset.begin(), cls.iset.end(), partner) == cls.iset.end()) closed = false;
  }
  if (!closed) cls.warnings.push_back("leading block set is not closed under conjugation (complex f)");
  return cls;
}

LimitLawPrediction predict(const Eigen::VectorXd& f, const Mechanism& mech, const SpectralData& spec,
                           const Classification& cls) {
  if (!cls.real_input) throw PreconditionError("predict: requires a real test function");
  if (f.size() != spec.dimension()) throw PreconditionError("predict: vector length mismatch");
  if (!(spec.lambda1 > 0.0)) throw PreconditionError("predict: requires a supercritical mechanism");
  LimitLawPrediction pr;
  pr.regime = cls.regime;
  pr.sigma_phi_sq = sigma_phi_sq(mech, spec);
  const double l1 = spec.lambda1;
  const double m = cls.mean_coeff.real();

  switch (cls.regime) {
    case Regime::Trivial:
      pr.c_exp = l1 / 2.0;
      pr.p_pow = 0.0;
      pr.normalized_quantity = "exp(-lambda1 t)<f,X_t> - <f,phitilde> W_inf";
      pr.variance = m * m * pr.sigma_phi_sq;
      pr.kind = pr.variance > 0.0 ? LimitKind::GaussianMixture : LimitKind::Degenerate;
      pr.covariance_rate = l1 / 2.0;
      pr.rho_f_sq = pr.variance;
      break;
    case Regime::Small:
      pr.c_exp = l1 / 2.0;
      pr.p_pow = 0.0;
      pr.normalized_quantity = "exp(-lambda1 t)<f,X_t> - <f,phitilde> W_inf";
      pr.rho_f_sq = rho_fluctuation_part(mech, spec, cls) + m * m * pr.sigma_phi_sq;
      pr.variance = pr.rho_f_sq;
      pr.kind = LimitKind::GaussianMixture;
      break;
    case Regime::Critical:
      pr.c_exp = l1 / 2.0;
      pr.p_pow = -(0.5 + cls.gamma);
      pr.normalized_quantity = "exp(-lambda1 t)<f,X_t> - <f,phitilde> W_inf";
      pr.varrho_sq = varrho_sq(mech, spec, cls);
      pr.variance = pr.varrho_sq / (1.0 + 2.0 * cls.gamma);
      pr.kind = LimitKind::GaussianMixture;
      break;
    case Regime::Large: {
      pr.c_exp = -cls.alpha;
      pr.p_pow = -static_cast<double>(cls.gamma);
      pr.normalized_quantity = "<fhat,X_t>";
      pr.kind = LimitKind::L2MartingaleLimit;
      for (std::size_t j = 0; j < cls.iset.size(); ++j)
        pr.martingales.push_back({spec.blocks[static_cast<std::size_t>(cls.iset[j])].eigenvalue, cls.F[j]});
      pr.varrho_sq = varrho_sq(mech, spec, cls);
      pr.has_secondary = true;
      pr.secondary_variance = pr.varrho_sq / (l1 - 2.0 * cls.epsilon);
      pr.secondary_c_exp = l1 / 2.0 - cls.epsilon;
      if (cls.has_fstar) pr.delta_sq = delta_sq(mech, spec, cls.fstar, cls.epsilon);
      break;
    }
  }
  if ((cls.regime == Regime::Critical || cls.regime == Regime::Large) && !cls.has_fstar)
    pr.notes.push_back(
        "fixed f* hypothesis not satisfied (leading blocks are an oscillating set); oscillatory form used");
  return pr;
}

double prop_a_residual(const Eigen::MatrixXd& B, const SpectralData& spec, const Classification& cls, double t) {
  if (cls.regime == Regime::Trivial) return 0.0;
  if (!(t > 0.0)) throw PreconditionError("prop_a_residual: t must be positive");
  // Deflate the Perron mode: fhat has no phi component, so e^{tB} fhat = e^{tB'} fhat, and e^{tB'} does not
  // carry the e^{lambda1 t} growth whose round-off would swamp the subleading blocks for large t.
  const Eigen::MatrixXd deflated = B - spec.lambda1 * spec.phi * spec.phitilde.transpose();
  Eigen::VectorXcd g = expm(t * deflated).cast<cplx>() * cls.fhat;
  g *= std::pow(t, -cls.gamma) * std::exp(-cls.alpha * t);
  Eigen::VectorXcd target = Eigen::VectorXcd::Zero(g.size());
  for (std::size_t j = 0; j < cls.iset.size(); ++j) {
    const double im = spec.blocks[static_cast<std::size_t>(cls.iset[j])].eigenvalue.imag();
    target += std::exp(cplx(0.0, t * im)) * cls.F[j];
  }
  target /= factorial(cls.gamma);
  return (g - target).cwiseAbs().maxCoeff();
}

}  // namespace superlab
