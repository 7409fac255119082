// superlab command-line interface.
//
// Exit status: 0 when every requested check passes, 1 when a check fails,
// 2 on usage, configuration or model errors (reported as JSON on stderr).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "superlab/classifier.hpp"
#include "superlab/model_io.hpp"
#include "superlab/moments.hpp"
#include "superlab/report.hpp"
#include "superlab/semigroup.hpp"
#include "superlab/simulator.hpp"
#include "superlab/suite.hpp"

namespace fs = std::filesystem;
using namespace superlab;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::complex<double> parse_component(const std::string& tok) {
  const std::string s = trim(tok);
  if (s.empty()) throw ConfigError("empty component in vector");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double re = std::strtod(begin, &end);
  if (end == begin) throw ConfigError("cannot parse component '" + s + "'");
  const std::size_t used = static_cast<std::size_t>(end - begin);
  if (used == s.size()) return {re, 0.0};
  if (s[used] == 'i' && used + 1 == s.size()) return {0.0, re};
  if (s[used] == '+' || s[used] == '-') {
    char* end2 = nullptr;
    const double im = std::strtod(end, &end2);
    if (end2 != end && *end2 == 'i' && static_cast<std::size_t>(end2 - begin) + 1 == s.size()) return {re, im};
  }
  throw ConfigError("cannot parse component '" + s + "' (expected a real or re+imi)");
}

Eigen::VectorXcd parse_vector(const std::string& text) {
  std::vector<std::complex<double>> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(parse_component(tok));
  if (v.empty()) throw ConfigError("empty vector");
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Eigen::VectorXd parse_real_vector(const std::string& text, const char* what) {
  const Eigen::VectorXcd v = parse_vector(text);
  if (!v.imag().isZero(0.0)) throw ConfigError(std::string(what) + " must be real");
  return v.real();
}

std::vector<double> parse_list(const std::string& text) {
  const Eigen::VectorXd v = parse_real_vector(text, "time grid");
  return std::vector<double>(v.data(), v.data() + v.size());
}

int default_workers() {
  if (const char* env = std::getenv("SUPERLAB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (...) {
    }
    throw ConfigError("SUPERLAB_WORKERS must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Option values, filled from flags first and the --config file second.
struct Params {
  std::string model;
  std::string config;
  std::string f;
  std::string x0;
  std::string t_grid;
  std::string s_grid;
  std::string suite;
  std::string out;
  double t = 4.0;
  double T = 0.0;
  double dt = 1e-3;
  std::string record;
  std::size_t replicas = 20000;
  std::uint64_t seed = 42;
  int workers = 0;
  std::vector<std::string> inputs;
};

/// Applies config-file values to every option the command line left unset.
void apply_config(CLI::App* cmd, Params& p) {
  if (p.config.empty()) return;
  Json cfg = Json::parse(read_file(p.config), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) throw ConfigError("config file " + p.config + " is not a JSON object");
  // a run manifest replays through its `config` section
  if (cfg.contains("tool") && cfg.contains("config")) cfg = Json(cfg["config"]);
  static const std::map<std::string, std::string> known = {
      {"model", "--model"}, {"f", "--f"},           {"x0", "--x0"},       {"t_grid", "--t-grid"},
      {"s_grid", "--s-grid"}, {"suite", "--suite"}, {"out", "--out"},     {"t", "--t"},
      {"T", "--T"},         {"dt", "--dt"},         {"record", "--record"}, {"replicas", "--replicas"},
      {"seed", "--seed"},   {"workers", "--workers"}};
  for (const auto& [key, value] : cfg.items()) {
    const auto it = known.find(key);
    if (it == known.end()) throw ConfigError("unknown field '" + key + "' in config file");
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option(it->second);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("field '" + key + "' does not apply to this subcommand");
    }
    if (opt->count() > 0) continue;  // flags win
    auto as_text = [&](const Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_array()) {
        std::string s;
        for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
        return s;
      }
      return v.dump();
    };
    if (key == "model") p.model = value.get<std::string>();
    else if (key == "f") p.f = as_text(value);
    else if (key == "x0") p.x0 = as_text(value);
    else if (key == "t_grid") p.t_grid = as_text(value);
    else if (key == "s_grid") p.s_grid = as_text(value);
    else if (key == "suite") p.suite = value.get<std::string>();
    else if (key == "out") p.out = value.get<std::string>();
    else if (key == "t") p.t = value.get<double>();
    else if (key == "T") p.T = value.get<double>();
    else if (key == "dt") p.dt = value.get<double>();
    else if (key == "record") p.record = as_text(value);
    else if (key == "replicas") p.replicas = value.get<std::size_t>();
    else if (key == "seed") p.seed = value.get<std::uint64_t>();
    else if (key == "workers") p.workers = value.get<int>();
  }
  if (p.model.empty() && cmd->get_name() != "report") throw ConfigError("--model is required");
}

Json to_array(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

Json manifest(const std::string& subcommand, const Params& p, const std::string& model_hash, const Json& params,
              const Json& config, const std::vector<std::string>& outputs, double seconds, int workers) {
  Json m;
  m["tool"] = "superlab";
  m["version"] = SUPERLAB_VERSION;
  m["subcommand"] = subcommand;
  m["model"] = p.model;
  m["model_hash"] = model_hash;
  m["master_seed"] = p.seed;
  m["parameters"] = params;
  m["config"] = config;
  m["outputs"] = outputs;
  m["workers"] = workers;
  m["wall_clock_seconds"] = seconds;
  return m;
}

int cmd_validate(const Params& p) {
  const Mechanism mech = load_mechanism(p.model);
  const ValidationReport rep = validate(mech);
  print(to_json(rep));
  return rep.ok() ? 0 : kExitFail;
}

int cmd_spectrum(const Params& p) {
  const Mechanism mech = load_mechanism(p.model);
  const SpectralData spec = spectral_decompose(mean_matrix(mech).B());
  print(to_json(spec));
  return 0;
}

int cmd_classify(const Params& p, bool full_predict) {
  if (p.f.empty()) throw ConfigError("--f is required");
  const Mechanism mech = load_mechanism(p.model);
  const SpectralData spec = spectral_decompose(mean_matrix(mech).B());
  const Eigen::VectorXcd f = parse_vector(p.f);
  if (f.size() != mech.K) throw ConfigError("--f length does not match number of types");
  const Classification cls = classify(f, spec);
  Json out;
  out["classification"] = to_json(cls);
  if (cls.real_input) {
    const Eigen::VectorXd fr = f.real();
    out["prediction"] = to_json(predict(fr, mech, spec, cls));
    if (full_predict) {
      out["constants"] = {{"sigma_phi_sq", sigma_phi_sq(mech, spec)}};
      const Eigen::VectorXd theta = big_theta(mech, spec);
      out["constants"]["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
      const std::vector<double> grid = p.t_grid.empty() ? std::vector<double>{5.0, 10.0, 20.0} : parse_list(p.t_grid);
      out["variance_asymptote"] = to_json(variance_asymptote(mech, spec, fr, cls, grid));
    }
  } else {
    out["prediction"] = nullptr;
    out["note"] = "limit laws are stated for real test functions; no prediction for complex f";
  }
  print(out);
  return 0;
}

int cmd_simulate(const Params& p, int workers) {
  if (p.out.empty()) throw ConfigError("--out is required");
  const auto start = std::chrono::steady_clock::now();
  const std::string text = read_file(p.model);
  const Mechanism mech = parse_mechanism(text);
  require_structurally_valid(mech);
  MartingaleWeights w(0.0, Eigen::VectorXd::Constant(mech.K, std::numeric_limits<double>::quiet_NaN()));
  try {
    const PerronTriplet tr = eigen_triplet(mean_matrix(mech).B());
    w = MartingaleWeights(tr.lambda1, tr.phi);
  } catch (const SpectralError&) {
    // simulation is still allowed for a reducible mean matrix; W is reported as nan
  }
  SimConfig cfg;
  cfg.x0 = p.x0.empty() ? Eigen::VectorXd::Unit(mech.K, 0) : parse_real_vector(p.x0, "--x0");
  cfg.T = p.T > 0.0 ? p.T : 1.0;
  cfg.dt = p.dt;
  cfg.record_times = p.record.empty() ? std::vector<double>{cfg.T} : parse_list(p.record);
  const Ensemble ens = simulate_ensemble(mech, w, cfg, p.replicas, p.seed, workers);

  fs::create_directories(p.out);
  const std::string csv = (fs::path(p.out) / "ensemble.csv").string();
  const std::string meta = (fs::path(p.out) / "ensemble.meta.json").string();
  const std::string man = (fs::path(p.out) / "manifest.json").string();
  const std::string hash = fnv1a_hex(text);
  write_text_file(csv, ensemble_csv(ens));
  write_text_file(meta, ensemble_metadata(ens, hash).dump(2) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json params = ensemble_metadata(ens, hash);
  Json config = {{"model", p.model}, {"x0", to_array(cfg.x0)}, {"T", cfg.T}, {"dt", cfg.dt},
                 {"record", cfg.record_times}, {"replicas", p.replicas}, {"seed", p.seed}};
  write_text_file(man, manifest("simulate", p, hash, params, config, {csv, meta}, secs, workers).dump(2) + "\n");
  print({{"outputs", {csv, meta, man}}, {"clamp_events", ens.total_clamp_events()}});
  return 0;
}

int cmd_verify(const Params& p, int workers) {
  if (p.suite.empty()) throw ConfigError("--suite is required (lln, fclt or regime)");
  const auto start = std::chrono::steady_clock::now();
  const std::string text = read_file(p.model);
  const Mechanism mech = parse_mechanism(text);
  SuiteOptions opt;
  opt.suite = p.suite;
  if (!p.f.empty()) opt.f = parse_real_vector(p.f, "--f");
  if (!p.x0.empty()) opt.x0 = parse_real_vector(p.x0, "--x0");
  if (!p.t_grid.empty()) opt.t_grid = parse_list(p.t_grid);
  if (!p.s_grid.empty()) opt.s_grid = parse_list(p.s_grid);
  opt.t = p.t;
  if (p.T > 0.0) opt.T = p.T;
  opt.dt = p.dt;
  opt.replicas = p.replicas;
  opt.seed = p.seed;
  opt.workers = workers;
  const SuiteRun run = run_suite(mech, opt);

  const std::string dir = p.out.empty() ? std::string("results") : p.out;
  fs::create_directories(dir);
  const std::string csv = (fs::path(dir) / (p.suite + ".csv")).string();
  const std::string js = (fs::path(dir) / (p.suite + ".json")).string();
  const std::string man = (fs::path(dir) / (p.suite + ".manifest.json")).string();
  write_text_file(csv, results_csv({run.result}));
  Json res = to_json(run.result);
  res["parameters"] = run.parameters;
  write_text_file(js, res.dump(2) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Json& rp = run.parameters;
  Json config = {{"model", p.model}, {"suite", p.suite}};
  if (rp.contains("f")) config["f"] = rp["f"];
  config["x0"] = rp["x0"];
  if (p.suite == "fclt") {
    config["t"] = rp["t"];
    config["s_grid"] = rp["grid"];
  } else {
    config["t_grid"] = rp["grid"];
  }
  config["T"] = rp["T"];
  config["dt"] = rp["dt"];
  config["replicas"] = rp["replicas"];
  config["seed"] = rp["seed"];
  write_text_file(man, manifest("verify", p, fnv1a_hex(text), rp, config, {csv, js}, secs, workers).dump(2) + "\n");
  std::cout << results_csv({run.result});
  return run.result.passed() ? 0 : kExitFail;
}

int cmd_report(const Params& p) {
  if (p.inputs.empty()) throw ConfigError("report needs at least one results file or directory");
  std::vector<std::string> files;
  for (const auto& in : p.inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".json" && name.find("manifest") == std::string::npos &&
            name.find(".meta.") == std::string::npos)
          found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  std::string table = std::string(kResultsCsvHeader) + "\n";
  bool all_pass = true;
  Json summary = Json::array();
  for (const auto& file : files) {
    const Json j = Json::parse(read_file(file), nullptr, false);
    if (j.is_discarded() || !j.contains("experiment") || !j.contains("rows"))
      throw ConfigError(file + " is not an experiment result file");
    const bool passed = j.value("passed", false);
    all_pass = all_pass && passed;
    summary.push_back({{"file", file}, {"experiment", j["experiment"]}, {"passed", passed}});
    auto field = [](const Json& v) {
      if (v.is_number()) return format_double(v.get<double>());
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    for (const auto& r : j["rows"])
      table += j["experiment"].get<std::string>() + ',' + r["quantity"].get<std::string>() + ',' + field(r["time"]) +
               ',' + field(r["empirical"]) + ',' + field(r["stderr"]) + ',' + field(r["predicted"]) + ',' +
               r["verdict"].get<std::string>() + '\n';
  }
  if (!p.out.empty()) {
    write_text_file(p.out, table);
  } else {
    std::cout << table;
  }
  std::cerr << Json{{"summary", summary}, {"all_passed", all_pass}}.dump() << '\n';
  return all_pass ? 0 : kExitFail;
}

void error_json(const std::string& kind, const std::string& msg) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", msg}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superlab: analysis, simulation and Monte Carlo verification of multitype branching superprocesses"};
  app.set_version_flag("--version", SUPERLAB_VERSION);
  app.require_subcommand(1);
  Params p;

  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", p.model, "model file (JSON)");
    c->add_option("--config", p.config, "JSON file with option values; command-line flags take precedence");
  };
  auto add_sim = [&](CLI::App* c) {
    c->add_option("--x0", p.x0, "initial masses, comma separated (default: unit mass of type 1)");
    c->add_option("--T", p.T, "horizon");
    c->add_option("--dt", p.dt, "time step")->capture_default_str();
    c->add_option("--replicas", p.replicas, "number of replicas")->capture_default_str();
    c->add_option("--seed", p.seed, "master seed")->capture_default_str();
    c->add_option("--workers", p.workers, "worker threads (default: $SUPERLAB_WORKERS or all cores)");
    c->add_option("--out", p.out, "output directory");
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a model and print the validation report");
  add_model(validate_cmd);
  auto* spectrum_cmd = app.add_subcommand("spectrum", "print the eigentriplet and Jordan blocks of B");
  add_model(spectrum_cmd);
  auto* classify_cmd = app.add_subcommand("classify", "classify a test function and print its limit law");
  add_model(classify_cmd);
  classify_cmd->add_option("--f", p.f, "test function: comma separated reals or re+imi");
  auto* predict_cmd = app.add_subcommand("predict", "print every limit constant for a test function");
  add_model(predict_cmd);
  predict_cmd->add_option("--f", p.f, "test function: comma separated reals");
  predict_cmd->add_option("--t-grid", p.t_grid, "times for the variance asymptote table");
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate an ensemble and write it as CSV");
  add_model(simulate_cmd);
  add_sim(simulate_cmd);
  simulate_cmd->add_option("--record", p.record, "record times, comma separated (default: T)");
  auto* verify_cmd = app.add_subcommand("verify", "run a Monte Carlo verification suite");
  add_model(verify_cmd);
  add_sim(verify_cmd);
  verify_cmd->add_option("--suite", p.suite, "lln, fclt or regime");
  verify_cmd->add_option("--f", p.f, "test function (lln, regime)");
  verify_cmd->add_option("--t-grid", p.t_grid, "times for lln and regime");
  verify_cmd->add_option("--t", p.t, "base time for fclt")->capture_default_str();
  verify_cmd->add_option("--s-grid", p.s_grid, "offsets for fclt");
  auto* report_cmd = app.add_subcommand("report", "aggregate result files into one table");
  report_cmd->add_option("inputs", p.inputs, "result JSON files or directories");
  report_cmd->add_option("--out", p.out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_json("usage", e.what());
    return kExitUsage;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    apply_config(cmd, p);
    if (cmd != report_cmd && p.model.empty()) throw ConfigError("--model is required");
    const int workers = p.workers > 0 ? p.workers : default_workers();
    if (cmd == validate_cmd) return cmd_validate(p);
    if (cmd == spectrum_cmd) return cmd_spectrum(p);
    if (cmd == classify_cmd) return cmd_classify(p, false);
    if (cmd == predict_cmd) return cmd_classify(p, true);
    if (cmd == simulate_cmd) return cmd_simulate(p, workers);
    if (cmd == verify_cmd) return cmd_verify(p, workers);
    if (cmd == report_cmd) return cmd_report(p);
  } catch (const Error& e) {
    error_json(e.kind(), e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    error_json("config", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    error_json("internal", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
