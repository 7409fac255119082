#pragma once

// Euler-Maruyama simulation of the multitype CSBP with full truncation at 0
// and per-step compound Poisson jumps.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superlab/model.hpp"
#include "superlab/semigroup.hpp"

namespace superlab {

struct SimConfig {
  Eigen::VectorXd x0;
  double T = 1.0;
  double dt = 1e-3;
  std::vector<double> record_times;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// Weights for the additive martingale W_t = e^{-lambda1 t}<phi, X_t>.
struct MartingaleWeights {
  double lambda1 = 0.0;
  Eigen::VectorXd phi;

  MartingaleWeights() = default;
  MartingaleWeights(double l, Eigen::VectorXd p) : lambda1(l), phi(std::move(p)) {}
  explicit MartingaleWeights(const SpectralData& spec) : lambda1(spec.lambda1), phi(spec.phi) {}
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  ///< X at each record time
  std::vector<double> W;                ///< W at each record time
  Eigen::VectorXd X_final;              ///< X_T
  double W_final = 0.0;                 ///< W_T, the estimate of W_inf
  bool extinct = false;
  double extinction_time = -1.0;
  long clamp_events = 0;
  long steps = 0;
};

/// Validated step count and record indices for a configuration.
struct TimeGrid {
  long n_steps = 0;
  double dt = 0.0;
  std::vector<long> record_steps;
};
TimeGrid make_time_grid(const SimConfig& cfg);

Trajectory simulate_path(const Mechanism& mech, const MartingaleWeights& w, const SimConfig& cfg);

struct Ensemble {
  SimConfig config;  ///< replica field unused
  std::uint64_t master_seed = 0;
  std::vector<Trajectory> paths;  ///< indexed by replica

  std::size_t size() const { return paths.size(); }
  long total_clamp_events() const;
  long total_steps() const;
};

/// Replica r is simulated with Rng(master_seed, r); the output does not depend on `workers`.
/// workers <= 0 uses the hardware concurrency.
Ensemble simulate_ensemble(const Mechanism& mech, const MartingaleWeights& w, const SimConfig& cfg,
                           std::size_t n_replicas, std::uint64_t master_seed, int workers = 1);

}  // namespace superlab
