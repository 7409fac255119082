#include "superlab/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace superlab {

namespace {

constexpr double kDominationTol = 1e-12;

std::string type_label(int i) { return "type " + std::to_string(i + 1); }

}  // namespace

Mechanism Mechanism::zeros(int K) {
  Mechanism m;
  m.K = K;
  m.a = Eigen::VectorXd::Zero(K);
  m.b = Eigen::VectorXd::Zero(K);
  m.eta = Eigen::MatrixXd::Zero(K, K);
  m.jumps.assign(static_cast<std::size_t>(K), {});
  return m;
}

bool is_irreducible(const Eigen::MatrixXd& M) {
  const Eigen::Index n = M.rows();
  if (n <= 1) return true;
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j || seen[static_cast<std::size_t>(j)]) continue;
        const double w = transpose ? M(j, i) : M(i, j);
        if (w > 0.0) {
          seen[static_cast<std::size_t>(j)] = 1;
          stack.push_back(j);
        }
      }
    }
    for (char s : seen)
      if (!s) return false;
    return true;
  };
  return reaches_all(false) && reaches_all(true);
}

ValidationReport validate(const Mechanism& mech) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, bool hard, std::string detail) {
    rep.checks.push_back({std::move(name), ok, hard, std::move(detail)});
    if (hard && !ok) rep.structural_ok = false;
  };

  const int K = mech.K;
  if (K < 1) {
    add("dimension", false, true, "number of types must be positive");
    rep.lambda1 = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  const bool shapes = mech.a.size() == K && mech.b.size() == K && mech.eta.rows() == K &&
                      mech.eta.cols() == K && mech.jumps.size() == static_cast<std::size_t>(K);
  add("dimension", shapes, true, shapes ? "" : "array sizes do not match the number of types");
  if (!shapes) {
    rep.lambda1 = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  bool finite = mech.a.allFinite() && mech.b.allFinite() && mech.eta.allFinite();
  for (const auto& atoms : mech.jumps)
    for (const auto& at : atoms) finite = finite && std::isfinite(at.rate) && at.size.allFinite();
  add("finite values", finite, true, finite ? "" : "non-finite coefficient");

  {
    std::ostringstream os;
    bool ok = true;
    for (int i = 0; i < K; ++i)
      if (mech.b(i) < 0.0) {
        ok = false;
        os << type_label(i) << ": b = " << mech.b(i) << " < 0; ";
      }
    add("nonnegative b", ok, true, os.str());
  }
  {
    std::ostringstream os;
    bool ok = true;
    for (int i = 0; i < K; ++i)
      if (mech.eta(i, i) != 0.0) {
        ok = false;
        os << "nonzero diagonal eta(" << i + 1 << "," << i + 1 << ") = " << mech.eta(i, i) << "; ";
      }
    add("zero eta diagonal", ok, true, os.str());
  }
  {
    std::ostringstream os;
    bool ok = true;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        if (i != j && mech.eta(i, j) < 0.0) {
          ok = false;
          os << "eta(" << i + 1 << "," << j + 1 << ") < 0; ";
        }
    add("nonnegative eta", ok, true, os.str());
  }
  {
    std::ostringstream os;
    bool ok = true;
    for (int i = 0; i < K; ++i) {
      for (std::size_t k = 0; k < mech.jumps[static_cast<std::size_t>(i)].size(); ++k) {
        const auto& at = mech.jumps[static_cast<std::size_t>(i)][k];
        if (at.size.size() != K) {
          ok = false;
          os << type_label(i) << " atom " << k + 1 << ": wrong vector length; ";
          continue;
        }
        if (at.rate < 0.0) {
          ok = false;
          os << type_label(i) << " atom " << k + 1 << ": negative rate; ";
        }
        if ((at.size.array() < 0.0).any() || !(at.size.array() > 0.0).any()) {
          ok = false;
          os << type_label(i) << " atom " << k + 1 << ": vector must be >= 0 and nonzero; ";
        }
      }
    }
    add("jump atoms", ok, true, os.str());
    if (ok) {
      std::ostringstream dom;
      bool dom_ok = true;
      for (int i = 0; i < K; ++i) {
        Eigen::VectorXd mean_jump = Eigen::VectorXd::Zero(K);
        for (const auto& at : mech.jumps[static_cast<std::size_t>(i)]) mean_jump += at.rate * at.size;
        for (int j = 0; j < K; ++j)
          if (j != i && mean_jump(j) > mech.eta(i, j) + kDominationTol) {
            dom_ok = false;
            dom << "sum_k g y_j = " << mean_jump(j) << " exceeds eta(" << i + 1 << "," << j + 1
                << ") = " << mech.eta(i, j) << "; ";
          }
      }
      add("cross-mean domination", dom_ok, true, dom.str());
    }
  }

  // Finite atom lists always have finite second and fourth moments.
  add("second moment finite", true, true, "finite atom list");
  rep.fourth_moment_finite = true;

  if (!rep.structural_ok) {
    rep.lambda1 = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  const Eigen::MatrixXd B = MomentOperators(mech).B();
  rep.irreducible = is_irreducible(B);
  add("irreducible", rep.irreducible, false,
      rep.irreducible ? "" : "graph of positive off-diagonal entries is not strongly connected");

  Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
  rep.lambda1 = es.eigenvalues().real().maxCoeff();
  rep.supercritical = rep.lambda1 > 0.0;
  {
    std::ostringstream os;
    os.precision(17);
    os << "lambda1 = " << rep.lambda1;
    add("supercritical", rep.supercritical, false, os.str());
  }

  rep.min_b_positive = mech.b.minCoeff() > 0.0;
  add("min b > 0", rep.min_b_positive, false,
      rep.min_b_positive
          ? "extinction has positive probability (sufficient condition only)"
          : "min b = 0: extinction criterion not certified (sufficient condition only); "
            "critical-regime Monte Carlo guard raised");
  add("fourth moment finite", true, false, "finite atom list");
  return rep;
}

void require_structurally_valid(const Mechanism& mech) {
  const ValidationReport rep = validate(mech);
  if (rep.structural_ok) return;
  std::ostringstream os;
  os << "invalid mechanism:";
  for (const auto& c : rep.checks)
    if (c.hard && !c.passed) os << " [" << c.name << "] " << c.detail;
  throw ModelError(os.str());
}

MomentOperators::MomentOperators(const Mechanism& mech) {
  const int K = mech.K;
  B_ = mech.eta;
  B_.diagonal() = -mech.a;
  two_b_ = 2.0 * mech.b;
  std::size_t n_atoms = 0;
  for (const auto& atoms : mech.jumps) n_atoms += atoms.size();
  atom_sizes_.resize(K, static_cast<Eigen::Index>(n_atoms));
  atom_rates_.resize(static_cast<Eigen::Index>(n_atoms));
  Eigen::Index k = 0;
  for (int i = 0; i < K; ++i)
    for (const auto& at : mech.jumps[static_cast<std::size_t>(i)]) {
      atom_sizes_.col(k) = at.size;
      atom_rates_(k) = at.rate;
      atom_owner_.push_back(i);
      ++k;
    }
}

double MomentOperators::vartheta_norm() const {
  Eigen::VectorXd c = two_b_;
  for (Eigen::Index k = 0; k < atom_sizes_.cols(); ++k) {
    const double l1 = atom_sizes_.col(k).cwiseAbs().sum();
    c(atom_owner_[static_cast<std::size_t>(k)]) += atom_rates_(k) * l1 * l1;
  }
  return c.size() ? c.maxCoeff() : 0.0;
}

MomentOperators mean_matrix(const Mechanism& mech) {
  require_structurally_valid(mech);
  return MomentOperators(mech);
}

Eigen::VectorXd psi(const Mechanism& mech, const Eigen::VectorXd& u) {
  const int K = mech.K;
  Eigen::VectorXd out = mech.a.cwiseProduct(u) + mech.b.cwiseProduct(u.cwiseAbs2()) - mech.eta * u;
  for (int i = 0; i < K; ++i) {
    for (const auto& at : mech.jumps[static_cast<std::size_t>(i)]) {
      const double x = u.dot(at.size);
      // exp(-x) - 1 + x, with a series near zero to avoid cancellation
      double v;
      if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        v = x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0);
      } else {
        v = std::expm1(-x) + x;
      }
      out(i) += at.rate * v;
    }
  }
  return out;
}

}  // namespace superlab
