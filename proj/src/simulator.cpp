#include "superlab/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "superlab/rng.hpp"

namespace superlab {

namespace {

struct Atom {
  int owner;
  double rate;
  Eigen::VectorXd size;
};

}  // namespace

TimeGrid make_time_grid(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("simulation: dt must be positive");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("simulation: T must be positive");
  TimeGrid g;
  g.n_steps = std::max(1L, std::lround(cfg.T / cfg.dt));
  g.dt = cfg.T / static_cast<double>(g.n_steps);
  if (std::abs(g.dt - cfg.dt) > 1e-9 * cfg.dt) {
    std::ostringstream os;
    os << "simulation: T = " << cfg.T << " is not a multiple of dt = " << cfg.dt;
    throw ConfigError(os.str());
  }
  double prev = -1.0;
  for (double t : cfg.record_times) {
    if (!(t >= 0.0) || t > cfg.T * (1.0 + 1e-12)) throw ConfigError("simulation: record time outside [0, T]");
    if (t < prev) throw ConfigError("simulation: record times must be sorted");
    prev = t;
    const long k = std::lround(t / g.dt);
    if (std::abs(static_cast<double>(k) * g.dt - t) > 1e-6 * g.dt) {
      std::ostringstream os;
      os << "simulation: record time " << t << " is not on the dt grid";
      throw ConfigError(os.str());
    }
    g.record_steps.push_back(k);
  }
  return g;
}

Trajectory simulate_path(const Mechanism& mech, const MartingaleWeights& w, const SimConfig& cfg) {
  require_structurally_valid(mech);
  const int K = mech.K;
  if (cfg.x0.size() != K) throw ConfigError("simulation: x0 length does not match number of types");
  if (!cfg.x0.allFinite() || (cfg.x0.array() < 0.0).any()) throw ConfigError("simulation: x0 must be >= 0");
  if (w.phi.size() != K) throw PreconditionError("simulation: martingale weights have the wrong length");
  const TimeGrid grid = make_time_grid(cfg);
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);

  const Eigen::MatrixXd Bt = mean_matrix(mech).B().transpose();
  std::vector<Atom> atoms;
  for (int i = 0; i < K; ++i)
    for (const auto& a : mech.jumps[static_cast<std::size_t>(i)]) atoms.push_back({i, a.rate, a.size});

  Rng rng(cfg.seed, cfg.replica);
  Trajectory tr;
  tr.times = cfg.record_times;
  tr.states.reserve(cfg.record_times.size());
  tr.W.reserve(cfg.record_times.size());

  Eigen::VectorXd X = cfg.x0;
  Eigen::VectorXd next(K);
  auto W_of = [&](double t) { return std::exp(-w.lambda1 * t) * w.phi.dot(X); };
  std::size_t rec = 0;
  auto record = [&](long step) {
    while (rec < grid.record_steps.size() && grid.record_steps[rec] == step) {
      tr.states.push_back(X);
      tr.W.push_back(W_of(cfg.record_times[rec]));
      ++rec;
    }
  };
  bool zero = (X.array() == 0.0).all();
  if (zero) {
    tr.extinct = true;
    tr.extinction_time = 0.0;
  }
  record(0);
  for (long n = 1; n <= grid.n_steps; ++n) {
    if (!zero) {
      for (int j = 0; j < K; ++j) {
        double drift = 0.0;
        for (int i = 0; i < K; ++i) drift += Bt(j, i) * X(i);
        next(j) = X(j) + dt * drift;
      }
      for (int i = 0; i < K; ++i) {
        if (mech.b(i) > 0.0 && X(i) > 0.0) next(i) += std::sqrt(2.0 * mech.b(i) * X(i)) * sqdt * rng.normal();
      }
      for (const auto& a : atoms) {
        const double xi = X(a.owner);
        if (xi <= 0.0 || a.rate == 0.0) continue;
        const double mean = xi * a.rate * dt;
        const auto count = static_cast<double>(rng.poisson(mean));
        next += (count - mean) * a.size;
      }
      for (int i = 0; i < K; ++i) {
        if (!std::isfinite(next(i))) {
          std::ostringstream os;
          os << "non-finite state at step " << n << " (t = " << n * dt << "), type " << i + 1
             << ", previous mass " << X(i);
          throw SimulationError(os.str());
        }
        if (next(i) < 0.0) {
          next(i) = 0.0;
          ++tr.clamp_events;
        }
      }
      X.swap(next);
      ++tr.steps;
      if ((X.array() == 0.0).all()) {
        zero = true;
        tr.extinct = true;
        tr.extinction_time = n * dt;
      }
    }
    record(n);
  }
  tr.X_final = X;
  tr.W_final = W_of(cfg.T);
  return tr;
}

long Ensemble::total_clamp_events() const {
  long s = 0;
  for (const auto& p : paths) s += p.clamp_events;
  return s;
}

long Ensemble::total_steps() const {
  long s = 0;
  for (const auto& p : paths) s += p.steps;
  return s;
}

Ensemble simulate_ensemble(const Mechanism& mech, const MartingaleWeights& w, const SimConfig& cfg,
                           std::size_t n_replicas, std::uint64_t master_seed, int workers) {
  if (n_replicas < 1) throw ConfigError("simulate_ensemble: need at least one replica");
  require_structurally_valid(mech);
  make_time_grid(cfg);  // fail fast on a bad grid
  Ensemble ens;
  ens.config = cfg;
  ens.master_seed = master_seed;
  ens.paths.resize(n_replicas);

  std::size_t n_workers = workers > 0 ? static_cast<std::size_t>(workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, n_replicas);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::vector<std::pair<std::size_t, std::string>> failures;

  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n_replicas) return;
      SimConfig c = cfg;
      c.seed = master_seed;
      c.replica = r;
      try {
        ens.paths[r] = simulate_path(mech, w, c);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        failures.emplace_back(r, e.what());
      }
    }
  };
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_workers; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::ostringstream os;
    os << failures.size() << " of " << n_replicas << " replicas failed:";
    for (std::size_t k = 0; k < std::min<std::size_t>(failures.size(), 10); ++k)
      os << " [replica " << failures[k].first << "] " << failures[k].second;
    if (failures.size() > 10) os << " ...";
    throw SimulationError(os.str());
  }
  return ens;
}

}  // namespace superlab
