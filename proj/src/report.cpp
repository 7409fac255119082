#include "superlab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace superlab {

namespace {

using cplx = std::complex<double>;

Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json cnum(cplx z) {
  if (z.imag() == 0.0) return num(z.real());
  return Json{{"re", num(z.real())}, {"im", num(z.imag())}};
}

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Json cvec(const Eigen::VectorXcd& v) {
  if (v.imag().isZero(0.0)) return vec(v.real());
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cnum(v(i)));
  return a;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // guard against a non-C numeric locale
  for (char* p = buf; *p; ++p)
    if (*p == ',') *p = '.';
  return buf;
}

Json to_json(const ValidationReport& rep) {
  Json j;
  Json checks = Json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"hard", c.hard}, {"detail", c.detail}});
  j["checks"] = checks;
  j["structural_ok"] = rep.structural_ok;
  j["irreducible"] = rep.irreducible;
  j["supercritical"] = rep.supercritical;
  j["lambda1"] = num(rep.lambda1);
  j["min_b_positive"] = rep.min_b_positive;
  j["fourth_moment_finite"] = rep.fourth_moment_finite;
  j["ok"] = rep.ok();
  return j;
}

Json to_json(const SpectralData& spec) {
  Json j;
  j["lambda1"] = num(spec.lambda1);
  j["phi"] = vec(spec.phi);
  j["phitilde"] = vec(spec.phitilde);
  j["spectral_gap"] = num(spec.spectral_gap());
  j["cluster_tolerance"] = num(spec.cluster_tolerance);
  Json blocks = Json::array();
  for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
    const auto& b = spec.blocks[k];
    Json jb;
    jb["index"] = k + 1;
    jb["eigenvalue"] = cnum(b.eigenvalue);
    jb["chain_lengths"] = b.chain_lengths;
    jb["conjugate"] = b.conjugate + 1;
    Json chains = Json::array(), duals = Json::array();
    for (int c = 0; c < b.size(); ++c) {
      chains.push_back(cvec(b.right.col(c)));
      duals.push_back(cvec(b.dual.col(c)));
    }
    jb["chains"] = chains;
    jb["duals"] = duals;
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;
  return j;
}

Json to_json(const Classification& cls) {
  Json j;
  j["regime"] = to_string(cls.regime);
  j["mean_coeff"] = cnum(cls.mean_coeff);
  j["fhat"] = cvec(cls.fhat);
  j["alpha"] = num(cls.alpha);
  j["gamma"] = cls.gamma;
  j["epsilon"] = num(cls.epsilon);
  j["lambda1"] = num(cls.lambda1);
  j["tolerance"] = num(cls.tolerance);
  Json iset = Json::array();
  for (int k : cls.iset) iset.push_back(k + 1);
  j["iset"] = iset;
  Json F = Json::array();
  for (std::size_t i = 0; i < cls.F.size(); ++i) F.push_back({{"block", cls.iset[i] + 1}, {"F", cvec(cls.F[i])}});
  j["F"] = F;
  if (cls.has_fstar) {
    j["r"] = cls.r;
    j["fstar"] = vec(cls.fstar);
  }
  Json proj = Json::array();
  for (const auto& p : cls.projections)
    proj.push_back({{"block", p.block + 1}, {"eigenvalue", cnum(p.eigenvalue)}, {"coefficients", cvec(p.coeffs)},
                    {"degree", p.degree}});
  j["projections"] = proj;
  j["warnings"] = cls.warnings;
  return j;
}

Json to_json(const LimitLawPrediction& pr) {
  Json j;
  j["regime"] = to_string(pr.regime);
  j["c_exp"] = num(pr.c_exp);
  j["p_pow"] = num(pr.p_pow);
  j["normalized_quantity"] = pr.normalized_quantity;
  switch (pr.kind) {
    case LimitKind::GaussianMixture:
      j["limit"] = {{"kind", "GaussianMixture"}, {"variance", num(pr.variance)}};
      break;
    case LimitKind::Degenerate:
      j["limit"] = {{"kind", "Degenerate"}};
      break;
    case LimitKind::L2MartingaleLimit: {
      Json ms = Json::array();
      for (const auto& m : pr.martingales) ms.push_back({{"eigenvalue", cnum(m.eigenvalue)}, {"F", cvec(m.F)}});
      j["limit"] = {{"kind", "L2MartingaleLimit"}, {"martingales", ms}};
      break;
    }
  }
  if (pr.has_secondary)
    j["secondary"] = {{"kind", "GaussianMixture"},
                      {"variance", num(pr.secondary_variance)},
                      {"c_exp", num(pr.secondary_c_exp)}};
  if (pr.regime == Regime::Trivial) j["covariance_kernel_rate"] = num(pr.covariance_rate);
  Json c;
  c["sigma_phi_sq"] = num(pr.sigma_phi_sq);
  if (!std::isnan(pr.rho_f_sq)) c["rho_f_sq"] = num(pr.rho_f_sq);
  if (!std::isnan(pr.varrho_sq)) c["varrho_sq"] = num(pr.varrho_sq);
  if (pr.delta_sq.size()) c["delta_sq"] = vec(pr.delta_sq);
  j["constants"] = c;
  j["notes"] = pr.notes;
  return j;
}

Json to_json(const ExperimentResult& res) {
  Json j;
  j["experiment"] = res.experiment;
  j["passed"] = res.passed();
  j["replicas"] = res.replicas;
  j["survivors"] = res.survivors;
  j["survival_fraction"] = num(res.survival_fraction);
  Json rows = Json::array();
  for (const auto& r : res.rows)
    rows.push_back({{"quantity", r.quantity},
                    {"time", num(r.time)},
                    {"empirical", num(r.empirical)},
                    {"stderr", num(r.stderr_)},
                    {"predicted", num(r.predicted)},
                    {"verdict", to_string(r.verdict)},
                    {"criterion", r.criterion}});
  j["rows"] = rows;
  j["notes"] = res.notes;
  return j;
}

Json to_json(const AsymptoteTable& table) {
  Json j;
  j["regime"] = to_string(table.regime);
  j["scaling"] = table.scaling;
  j["decreasing"] = table.decreasing;
  Json rows = Json::array();
  for (const auto& r : table.rows)
    rows.push_back(
        {{"t", num(r.t)}, {"scaled", vec(r.scaled)}, {"predicted", vec(r.predicted)}, {"deviation", num(r.deviation)}});
  j["rows"] = rows;
  return j;
}

std::string results_csv(const std::vector<ExperimentResult>& results) {
  std::string out = kResultsCsvHeader;
  out += '\n';
  for (const auto& res : results)
    for (const auto& r : res.rows) {
      out += res.experiment + ',' + r.quantity + ',' + format_double(r.time) + ',' + format_double(r.empirical) +
             ',' + format_double(r.stderr_) + ',' + format_double(r.predicted) + ',' + to_string(r.verdict) + '\n';
    }
  return out;
}

std::string ensemble_csv(const Ensemble& ens) {
  std::ostringstream os;
  const auto K = ens.config.x0.size();
  os << "replica,time";
  for (Eigen::Index i = 0; i < K; ++i) os << ",type_" << i + 1;
  os << ",W\n";
  for (std::size_t r = 0; r < ens.size(); ++r) {
    const auto& p = ens.paths[r];
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      os << r << ',' << format_double(p.times[k]);
      for (Eigen::Index i = 0; i < K; ++i) os << ',' << format_double(p.states[k](i));
      os << ',' << format_double(p.W[k]) << '\n';
    }
  }
  return os.str();
}

Json ensemble_metadata(const Ensemble& ens, const std::string& model_hash) {
  Json j;
  j["model_hash"] = model_hash;
  j["master_seed"] = ens.master_seed;
  j["replicas"] = ens.size();
  j["replica_seeding"] = "xoshiro256** state from (master_seed, replica index)";
  j["x0"] = vec(ens.config.x0);
  j["T"] = num(ens.config.T);
  j["dt"] = num(ens.config.dt);
  j["record_times"] = ens.config.record_times;
  j["clamp_events"] = ens.total_clamp_events();
  j["steps"] = ens.total_steps();
  std::size_t extinct = 0;
  for (const auto& p : ens.paths) extinct += p.extinct ? 1 : 0;
  j["extinct"] = extinct;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace superlab
