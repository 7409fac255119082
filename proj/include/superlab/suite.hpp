#pragma once

// Verification suites: choose the horizon and record grid for an experiment,
// simulate the ensemble and run the experiment on it.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superlab/fluctlab.hpp"
#include "superlab/model.hpp"
#include "superlab/report.hpp"

namespace superlab {

struct SuiteOptions {
  std::string suite;                 ///< lln, fclt or regime
  std::optional<Eigen::VectorXd> f;  ///< lln default: all ones; regime: required
  std::vector<double> t_grid;        ///< lln {1,2,4}; regime {3,4}, or {1,2,4} when Large
  double t = 4.0;                    ///< fclt base time
  std::vector<double> s_grid;        ///< fclt {0, 0.5, 1}
  std::optional<double> T;           ///< default from the horizon rules below
  double dt = 1e-3;
  std::size_t replicas = 20000;
  std::uint64_t seed = 42;
  int workers = 1;
  std::optional<Eigen::VectorXd> x0;  ///< default: unit mass of type 1
};

struct SuiteRun {
  ExperimentResult result;
  SimConfig config;
  Json parameters;  ///< resolved parameters, for the manifest
};

/// Default horizons, rounded up to a multiple of 0.5:
///   lln     max t + 3/lambda1
///   fclt    t + max s + 5/lambda1
///   regime  max t + 3/lambda1, or max t + 4/(lambda1 - 2 eps) when Large
SuiteRun run_suite(const Mechanism& mech, const SuiteOptions& opt);

}  // namespace superlab
