#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for scalar or Eigen
// vector valued integrands. The interval with the largest error estimate is
// bisected until the summed estimate meets max(abs_tol, rel_tol * |I|).

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "superlab/error.hpp"

namespace superlab {

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

template <typename Value>
struct QuadratureResult {
  Value value;
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

inline constexpr double kGkNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {0.129484966168869693270611432679082,
                                            0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975,
                                            0.417959183673469387755102040816327};

template <typename Value>
double magnitude(const Value& v) {
  if constexpr (std::is_arithmetic_v<Value>) {
    return std::abs(v);
  } else {
    return v.size() ? static_cast<double>(v.cwiseAbs().maxCoeff()) : 0.0;
  }
}

template <typename Value>
struct Panel {
  double a, b;
  Value value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename F>
auto gauss_kronrod_15(F& f, double a, double b) {
  using Value = std::decay_t<decltype(f(a))>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Value fc = f(c);
  Value kronrod = kKronrodWeights[7] * fc;
  Value gauss = kGaussWeights[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGkNodes[j];
    Value sum = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  Value k_scaled = h * kronrod;
  const double err = magnitude(Value(h * (kronrod - gauss)));
  return Panel<Value>{a, b, std::move(k_scaled), err};
}

}  // namespace detail

/// Integrate f over [a, b]. Throws QuadratureError when the tolerance is not met.
template <typename F>
auto integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  using Value = std::decay_t<decltype(f(a))>;
  using Panel = detail::Panel<Value>;
  if (!(b >= a)) throw PreconditionError("integrate: reversed interval");

  std::priority_queue<Panel> panels;
  Panel first = detail::gauss_kronrod_15(f, a, b);
  Value total = first.value;
  double total_err = first.error;
  int evaluations = 15;
  panels.push(std::move(first));

  auto converged = [&] {
    return total_err <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
  };
  while (!converged()) {
    if (static_cast<int>(panels.size()) >= opt.max_intervals) {
      throw QuadratureError("integrate: tolerance not met after " + std::to_string(panels.size()) +
                                " intervals",
                            detail::magnitude(total), total_err);
    }
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
    Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
    evaluations += 30;
    total = total - worst.value + left.value + right.value;
    total_err += left.error + right.error - worst.error;
    panels.push(std::move(left));
    panels.push(std::move(right));
  }

  // Re-sum from the panels so cancellation in the running update does not leak.
  std::vector<Panel> all;
  all.reserve(panels.size());
  while (!panels.empty()) {
    all.push_back(panels.top());
    panels.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  Value sum = all.front().value;
  double err = all.front().error;
  for (std::size_t i = 1; i < all.size(); ++i) {
    sum = sum + all[i].value;
    err += all[i].error;
  }
  return QuadratureResult<Value>{std::move(sum), err, evaluations};
}

}  // namespace superlab
