#pragma once

#include <random>
#include <string>

#include <Eigen/Dense>

#include "superlab/model_io.hpp"

namespace testing {

inline superlab::Mechanism fixture(const std::string& name) {
  return superlab::load_mechanism(std::string(SUPERLAB_FIXTURE_DIR) + "/" + name + ".json");
}

inline std::string fixture_path(const std::string& name) {
  return std::string(SUPERLAB_FIXTURE_DIR) + "/" + name + ".json";
}

inline const char* const kAllFixtures[] = {"fix1", "fix2", "fix3", "fix4", "fix5", "fix6", "jordan3"};

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(gen);
  return v;
}

/// max |a - b| / max(|b|_inf, floor)
template <typename A, typename B>
double rel_err(const A& a, const B& b, double floor = 1e-300) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(static_cast<double>(b.cwiseAbs().maxCoeff()), floor);
}

}  // namespace testing
