#include <algorithm>
#include <cmath>
#include <sstream>

#include "superlab/semigroup.hpp"

namespace superlab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

}  // namespace

CumulantSolution solve_cumulant_detailed(const Mechanism& mech, const Eigen::VectorXd& f, double t,
                                         const CumulantOptions& opt) {
  require_structurally_valid(mech);
  if (f.size() != mech.K) throw PreconditionError("solve_cumulant: vector length does not match number of types");
  if (!f.allFinite() || (f.array() < 0.0).any()) throw PreconditionError("solve_cumulant: f must be finite and >= 0");
  if (!std::isfinite(t) || t < 0.0) throw PreconditionError("solve_cumulant: t must be finite and >= 0");

  CumulantSolution sol;
  sol.value = f;
  if (t == 0.0 || f.isZero(0.0)) return sol;

  auto rhs = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -psi(mech, v.cwiseMax(0.0)); };

  Eigen::VectorXd v = f;
  Eigen::VectorXd k1 = rhs(v);
  double time = 0.0;
  double h = std::min(t, 0.01 / std::max(1.0, k1.cwiseAbs().maxCoeff() / std::max(1e-300, v.cwiseAbs().maxCoeff())));
  long steps = 0;
  while (time < t) {
    if (++steps > opt.max_steps)
      throw CumulantError("solve_cumulant: step budget exhausted", time);
    const bool last = time + h >= t;
    if (last) h = t - time;
    const Eigen::VectorXd k2 = rhs(v + h * (a21 * k1));
    const Eigen::VectorXd k3 = rhs(v + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = rhs(v + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 = rhs(v + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 = rhs(v + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::VectorXd next = v + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = rhs(next);
    const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double ratio = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(v(i)), std::abs(next(i)));
      ratio = std::max(ratio, std::abs(err(i)) / scale);
    }
    if (!std::isfinite(ratio)) ratio = 1e10;

    if (ratio <= 1.0) {
      time = last ? t : time + h;
      for (Eigen::Index i = 0; i < next.size(); ++i)
        if (next(i) < 0.0) {
          next(i) = 0.0;
          ++sol.clamp_events;
        }
      v = std::move(next);
      k1 = rhs(v);
      ++sol.accepted_steps;
      const double grow = ratio == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(ratio, -0.2));
      h *= grow;
    } else {
      ++sol.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(ratio, -0.2));
    }
    if (h < opt.min_step && time < t) {
      std::ostringstream os;
      os << "solve_cumulant: step size underflow (h = " << h << ")";
      throw CumulantError(os.str(), time);
    }
  }
  sol.value = v;
  return sol;
}

}  // namespace superlab
