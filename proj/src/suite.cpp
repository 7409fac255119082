#include "superlab/suite.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "superlab/classifier.hpp"

namespace superlab {

namespace {

double round_up_half(double x) { return std::ceil(x * 2.0 - 1e-9) / 2.0; }

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

SuiteRun run_suite(const Mechanism& mech, const SuiteOptions& opt) {
  require_structurally_valid(mech);
  const SpectralData spec = spectral_decompose(mean_matrix(mech).B());
  if (!(spec.lambda1 > 0.0)) throw PreconditionError("verify: the mechanism is not supercritical");
  const double l1 = spec.lambda1;

  SimConfig cfg;
  cfg.dt = opt.dt;
  cfg.x0 = opt.x0 ? *opt.x0 : Eigen::VectorXd::Unit(mech.K, 0);
  if (cfg.x0.size() != mech.K) throw ConfigError("verify: x0 length does not match number of types");

  SuiteRun run;
  Json params;
  params["suite"] = opt.suite;
  std::set<double> record;
  Eigen::VectorXd f;
  std::vector<double> grid = opt.t_grid;
  LimitLawPrediction prediction;

  if (opt.suite == "lln") {
    f = opt.f ? *opt.f : Eigen::VectorXd::Ones(mech.K);
    if (grid.empty()) grid = {1.0, 2.0, 4.0};
    cfg.T = opt.T ? *opt.T : round_up_half(*std::max_element(grid.begin(), grid.end()) + 3.0 / l1);
    record.insert(grid.begin(), grid.end());
  } else if (opt.suite == "fclt") {
    std::vector<double> s = opt.s_grid.empty() ? std::vector<double>{0.0, 0.5, 1.0} : opt.s_grid;
    grid = s;
    cfg.T = opt.T ? *opt.T : round_up_half(opt.t + *std::max_element(s.begin(), s.end()) + 5.0 / l1);
    for (double v : s) record.insert(opt.t + v);
    params["t"] = opt.t;
  } else if (opt.suite == "regime") {
    if (!opt.f) throw ConfigError("verify --suite regime requires --f");
    f = *opt.f;
    if (f.size() != mech.K) throw ConfigError("verify: f length does not match number of types");
    const Classification cls = classify(f, spec);
    prediction = predict(f, mech, spec, cls);
    if (grid.empty())
      grid = cls.regime == Regime::Large ? std::vector<double>{1.0, 2.0, 4.0} : std::vector<double>{3.0, 4.0};
    const double tmax = *std::max_element(grid.begin(), grid.end());
    double horizon = tmax + 3.0 / l1;
    if (cls.regime == Regime::Large) horizon = tmax + 4.0 / std::min(l1, l1 - 2.0 * cls.epsilon);
    cfg.T = opt.T ? *opt.T : round_up_half(horizon);
    record.insert(grid.begin(), grid.end());
    params["regime"] = to_string(cls.regime);
  } else {
    throw ConfigError("unknown suite '" + opt.suite + "' (expected lln, fclt or regime)");
  }
  for (double v : grid)
    if (!std::isfinite(v) || (v <= 0.0 && opt.suite != "fclt") || v < 0.0) throw ConfigError("verify: grid times must be positive");
  record.insert(cfg.T);
  cfg.record_times.assign(record.begin(), record.end());

  const Ensemble ens = simulate_ensemble(mech, MartingaleWeights(spec), cfg, opt.replicas, opt.seed, opt.workers);
  if (opt.suite == "lln")
    run.result = lln_experiment(mech, spec, f, ens, grid);
  else if (opt.suite == "fclt")
    run.result = fclt_experiment(mech, spec, ens, opt.t, grid);
  else
    run.result = regime_experiment(mech, spec, f, prediction, ens, grid);

  if (f.size()) params["f"] = vec_json(f);
  params["grid"] = grid;
  params["x0"] = vec_json(cfg.x0);
  params["T"] = cfg.T;
  params["dt"] = cfg.dt;
  params["replicas"] = opt.replicas;
  params["seed"] = opt.seed;
  params["record_times"] = cfg.record_times;
  params["clamp_events"] = ens.total_clamp_events();
  params["clamp_fraction"] = static_cast<double>(ens.total_clamp_events()) /
                             std::max(1.0, static_cast<double>(ens.total_steps()) * mech.K);
  run.config = cfg;
  run.parameters = params;
  return run;
}

}  // namespace superlab
