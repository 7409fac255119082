#pragma once

// Monte Carlo checks of the law of large numbers, the martingale functional
// CLT and the fluctuation trichotomy on simulated ensembles.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superlab/classifier.hpp"
#include "superlab/model.hpp"
#include "superlab/semigroup.hpp"
#include "superlab/simulator.hpp"

namespace superlab {

enum class Verdict { Pass, Fail, Info };

const char* to_string(Verdict v);

struct ResultRow {
  std::string quantity;
  double time = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double predicted = 0.0;
  Verdict verdict = Verdict::Info;
  std::string criterion;  ///< how `verdict` was decided
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::size_t replicas = 0;
  std::size_t survivors = 0;  ///< replicas with W_T > 0.01 <phi, x0>
  double survival_fraction = 0.0;
  std::vector<std::string> notes;

  /// True when no row failed.
  bool passed() const;
};

/// E|e^{-lambda1 t}<f,X_t> - <f,phitilde> W_T|^2 over t_grid.
/// Passes if the gap decreases along t_grid and the last value is below 10% of the first.
ExperimentResult lln_experiment(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                const Ensemble& ens, const std::vector<double>& t_grid);

/// Exact E|e^{-lambda1 t}<f,X_t> - <f,phitilde> W_T|^2 under the ensemble's initial state.
double lln_gap_exact(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                     const Eigen::VectorXd& x0, double t, double T);

/// Y_s = e^{lambda1 (t+s)/2} (W_{t+s} - W_T): variance ratio, correlations and normality.
ExperimentResult fclt_experiment(const Mechanism& mech, const SpectralData& spec, const Ensemble& ens, double t,
                                 const std::vector<double>& s_grid);

/// Second-moment and martingale checks for the regime predicted for f.
ExperimentResult regime_experiment(const Mechanism& mech, const SpectralData& spec, const Eigen::VectorXd& f,
                                   const LimitLawPrediction& prediction, const Ensemble& ens,
                                   const std::vector<double>& t_grid);

}  // namespace superlab
