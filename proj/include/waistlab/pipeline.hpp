#pragma once

// Artifact-writing stages and the full `run` pipeline:
// busemann -> weakkam -> diffusion -> ldp -> comparison, then the acceptance
// summary. Files never contain timings, so identical configs give identical
// bytes; timings go to the log stream only.

#include "waistlab/acceptance.hpp"
#include "waistlab/config.hpp"
#include "waistlab/csv.hpp"

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace waistlab {

namespace fs = std::filesystem;
using nlohmann::json;

inline const std::vector<std::string>& pipeline_modules() {
  static const std::vector<std::string> m{"busemann", "weakkam", "diffusion", "ldp", "comparison"};
  return m;
}

/// Parses a comma-separated module list; empty means all.
inline std::set<std::string> parse_only(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    bool known = false;
    for (const auto& m : pipeline_modules())
      known = known || m == item;
    if (!known)
      throw ValidationError("--only: unknown module '" + item + "'");
    out.insert(item);
  }
  return out;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Stages

/// z,r,E,G,K on `samples` heights spanning [-z_max, z_max].
inline void write_profile_info(const RevolutionProfile& p, const fs::path& path, int samples) {
  if (samples < 2)
    throw ValidationError("profile-info: samples must be >= 2");
  CsvWriter w(path, {"z", "r", "E", "G", "K"});
  for (int i = 0; i < samples; ++i) {
    const double z = -p.z_max + 2.0 * p.z_max * i / (samples - 1);
    const auto m = metric_coefficients(p, z);
    w.row(z, radius(p, z), m.E, m.G, gaussian_curvature(p, z));
  }
  w.close();
}

/// z,s,theta_lift,psi,clairaut_drift along one geodesic.
inline GeodesicPath write_geodesic(const RevolutionProfile& p, const GeodesicState& st, double horizon, double step,
                                   const fs::path& path) {
  const auto g = integrate_geodesic(p, st, horizon, step);
  CsvWriter w(path, {"s", "z", "theta_lift", "psi", "clairaut_drift"});
  for (const auto& s : g.samples)
    w.row(s.s, s.z, s.theta_lift, s.psi, s.clairaut_drift);
  w.close();
  return g;
}

struct BusemannTableOptions {
  bool quad = true;
  bool limit = true;
  double z_lo = 0.05;
  double z_hi = 0.5;
  int samples = 10;
  double horizon = 50.0;
};

/// z,value_quad,value_limit,abs_diff; columns of a method not run hold nan.
inline double write_busemann(const RevolutionProfile& p, const BusemannTableOptions& o, const fs::path& path,
                             int jobs = 1) {
  if (o.samples < 1 || !(o.z_hi >= o.z_lo))
    throw ValidationError("busemann: need samples >= 1 and z_hi >= z_lo");
  std::vector<double> zs(static_cast<std::size_t>(o.samples)), q(zs.size(), std::nan("")), l(zs.size(), std::nan(""));
  for (std::size_t i = 0; i < zs.size(); ++i)
    zs[i] = o.samples == 1 ? o.z_lo : o.z_lo + (o.z_hi - o.z_lo) * static_cast<double>(i) / (o.samples - 1);
  parallel_for(zs.size(), jobs, [&](std::size_t i) {
    if (o.quad)
      q[i] = busemann_sum_quadrature(p, zs[i]);
    if (o.limit)
      l[i] = busemann_limit_sum(p, {zs[i], 0.0}, o.horizon);
  });
  CsvWriter w(path, {"z", "value_quad", "value_limit", "abs_diff"});
  double worst = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double d = std::abs(q[i] - l[i]);
    if (std::isfinite(d))
      worst = std::max(worst, d);
    w.row(zs[i], q[i], l[i], d);
  }
  w.close();
  return worst;
}

/// Weak-KAM pair on the configured grid: field CSV plus JSON summary.
inline json write_weakkam(const ExperimentConfig& cfg, const fs::path& csv_path, const fs::path& json_path) {
  const Grid g = cfg.make_grid();
  SchemeOptions so;
  so.tau = cfg.tau();
  const LaxOleinikScheme scheme(cfg.profile, LagrangianSpec{cfg.c()}, g, so);
  const auto cv = critical_value(scheme);
  WeakKamOptions wo;
  wo.tol = cfg.weakkam.tol;
  wo.max_iter = cfg.weakkam.max_iter;
  const auto pair = weak_kam_pair(scheme, cv.c0, wo);
  const auto barrier = peierls_barrier_grid(pair.u_minus, pair.u_plus);
  CsvWriter w(csv_path, {"theta_index", "z_index", "u_minus", "u_plus", "barrier"});
  for (int i = 0; i < g.n_theta; ++i)
    for (int j = 0; j < g.n_z; ++j)
      w.row(i, j, pair.u_minus.at(i, j), pair.u_plus.at(i, j), barrier.at(i, j));
  w.close();
  json rows = json::array();
  try {
    for (int r : aubry_rows(aubry_set_detect(barrier, cfg.weakkam.aubry_tol)))
      rows.push_back(r);
  } catch (const EmptyAubrySet&) {
  }
  json j{{"c0", cv.c0},
         {"tau", scheme.tau()},
         {"iterations", {{"minus", pair.iterations_minus}, {"plus", pair.iterations_plus}}},
         {"residual", {{"minus", pair.residual_minus}, {"plus", pair.residual_plus}}},
         {"aubry_rows", rows},
         {"aubry_tol", cfg.weakkam.aubry_tol},
         {"waist_row", g.waist_row()}};
  write_json(json_path, j);
  return j;
}

/// Principal eigenpairs for +-lambda: JSON plus stationary density CSV.
inline json write_diffusion(const ExperimentConfig& cfg, double lambda, const fs::path& json_path,
                            const fs::path& csv_path) {
  const Grid g = cfg.make_grid();
  const auto plus = principal_eigenpair(assemble_twisted_laplacian(cfg.profile, g, lambda, cfg.c()));
  const auto minus = principal_eigenpair(assemble_twisted_laplacian(cfg.profile, g, -lambda, cfg.c()));
  const auto mu = stationary_measure(plus, minus, cfg.profile);
  CsvWriter w(csv_path, {"z_index", "theta_index", "density"});
  for (int j = 0; j < g.n_z; ++j)
    for (int i = 0; i < g.n_theta; ++i)
      w.row(j, i, mu.density.at(i, j));
  w.close();
  json j{{"lambda", lambda},
         {"Lambda_plus", plus.eigenvalue},
         {"Lambda_minus", minus.eigenvalue},
         {"residuals", {{"plus", plus.residual}, {"minus", minus.residual}}}};
  write_json(json_path, j);
  return j;
}

/// Lambda sweep and deviation report: JSON, flat CSV and a whitespace .dat.
inline json write_ldp(const ExperimentConfig& cfg, const fs::path& dir, int jobs = 1) {
  const SweepTable t = lambda_sweep(cfg.profile, cfg.c(), cfg.make_grid(), cfg.diffusion.lambdas, cfg.bands, jobs);
  DeviationReport rep;
  std::string fit_error;
  try {
    rep = compare_to_theorem1(t);
  } catch (const DegenerateFit& e) {
    fit_error = e.what();
    rep.bands = band_records(t);
    rep.expected_power = 2.0 + 0.5 * cfg.profile.k;
  }
  json bands = json::array();
  for (const auto& b : rep.bands) {
    bands.push_back({{"z_lo", b.band.z_lo},
                     {"z_hi", b.band.z_hi},
                     {"inf_distance", b.inf_distance},
                     {"lambdas", b.lambdas},
                     {"measures", b.measures},
                     {"rate", number_or_null(b.rate.rate)},
                     {"rate_sequence", json::array()},
                     {"barrier", b.barrier},
                     {"relative_error", number_or_null(b.relative_error)},
                     {"touches_waist", b.touches_waist},
                     {"error", b.error}});
    for (double v : b.rate.sequence)
      bands.back()["rate_sequence"].push_back(number_or_null(v));
  }
  json points = json::array();
  for (const auto& p : t.points)
    points.push_back({{"lambda", p.lambda},
                      {"Lambda_plus", p.Lambda_plus},
                      {"Lambda_minus", p.Lambda_minus},
                      {"residual_plus", p.residual_plus},
                      {"residual_minus", p.residual_minus},
                      {"half_width_cells", p.half_width_cells}});
  json j{{"profile", {{"a", cfg.profile.a}, {"b", cfg.profile.b}, {"k", cfg.profile.k}, {"z_max", cfg.profile.z_max}}},
         {"c", cfg.c()},
         {"grid", {{"n_theta", cfg.grid.n_theta}, {"n_z", cfg.grid.n_z}}},
         {"points", points},
         {"bands", bands},
         {"fit",
          {{"power", fit_error.empty() ? json(rep.power) : json(nullptr)},
           {"coeff", fit_error.empty() ? json(rep.coeff) : json(nullptr)},
           {"r_squared", fit_error.empty() ? json(rep.r_squared) : json(nullptr)},
           {"expected_power", rep.expected_power},
           {"D", fit_error.empty() ? json(rep.D) : json(nullptr)},
           {"error", fit_error}}}};
  write_json(dir / "ldp.json", j);

  CsvWriter w(dir / "ldp.csv", {"band_zlo", "band_zhi", "inf_dist", "lambda", "measure", "rate_seq"});
  for (const auto& b : rep.bands)
    for (std::size_t i = 0; i < b.lambdas.size(); ++i)
      w.row(b.band.z_lo, b.band.z_hi, b.inf_distance, b.lambdas[i], b.measures[i], b.rate.sequence[i]);
  w.close();

  TableWriter dat(dir / "ldp_rate.dat", {"inf_dist", "rate", "inf_P", "band_zlo", "band_zhi"}, ' ', "# ");
  for (const auto& b : rep.bands)
    dat.row(b.inf_distance, b.rate.rate, b.barrier, b.band.z_lo, b.band.z_hi);
  dat.close();
  return j;
}

struct CatCheckOptions {
  double b1 = 0.5, b2 = 2.0;
  int trials = 20;
  std::uint64_t seed = 20240611;
  double a = 1.0, k = 2.0, z_max = 1.0;
  bool strict = false;
};

inline std::vector<ComparisonTrial> write_cat_check(const CatCheckOptions& o, const fs::path& path, int jobs = 1) {
  const RevolutionProfile p1{o.a, o.b1, o.k, o.z_max}, p2{o.a, o.b2, o.k, o.z_max};
  validate(p1, true);
  validate(p2, true);
  ComparisonOptions opt;
  opt.jobs = jobs;
  opt.strict = false;
  const auto trials = angle_comparison_trial(p1, p2, o.trials, o.seed, opt);
  CsvWriter w(path, {"trial", "alpha1", "alpha2", "margin", "gb_residual1", "gb_residual2", "pass"});
  for (const auto& t : trials)
    w.row(t.trial, t.alpha1, t.alpha2, t.margin, t.gb_residual1, t.gb_residual2, t.pass);
  w.close();
  if (o.strict) {
    opt.strict = true;
    for (const auto& t : trials)
      if (!t.pass)
        throw ComparisonViolation("trial " + std::to_string(t.trial) + ": Fermi vertices (0,0), (0," + num(t.s) +
                                  "), (" + num(t.t) + ",0): alpha1 = " + num(t.alpha1) + ", alpha2 = " +
                                  num(t.alpha2) + ", containment = " + num(t.containment));
  }
  return trials;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct RunOptions {
  std::set<std::string> only; ///< empty: all modules
  int jobs = 1;
};

struct RunResult {
  int exit_code = 0;
  std::vector<CriterionResult> criteria;
  std::string error; ///< first module error, if any
};

inline std::string format_summary(const ExperimentConfig& cfg, const RunResult& res) {
  std::ostringstream s;
  s << "waistlab run summary\n";
  s << "config: " << to_json(cfg).dump() << "\n\n";
  int pass = 0, ran = 0;
  for (const auto& c : res.criteria) {
    s << "criterion " << c.id << ": " << (!c.ran ? "SKIPPED" : c.pass ? "PASS" : "FAIL") << "  [" << c.module << " / "
      << c.check << "]\n";
    for (const auto& v : c.values)
      s << "    " << v.name << " = " << format_number(v.value) << "\n";
    for (const auto& n : c.notes)
      s << "    note: " << n << "\n";
    ran += c.ran ? 1 : 0;
    pass += (c.ran && c.pass) ? 1 : 0;
  }
  s << "\n" << pass << "/" << ran << " criteria passed";
  if (!res.error.empty())
    s << "\nmodule error: " << res.error;
  s << "\n";
  return s.str();
}

inline json summary_json(const ExperimentConfig& cfg, const RunResult& res) {
  json crit = json::array();
  for (const auto& c : res.criteria) {
    json vals = json::object();
    for (const auto& v : c.values)
      vals[v.name] = number_or_null(v.value);
    crit.push_back({{"id", c.id},
                    {"module", c.module},
                    {"check", c.check},
                    {"status", !c.ran ? "SKIPPED" : c.pass ? "PASS" : "FAIL"},
                    {"values", vals},
                    {"notes", c.notes}});
  }
  return json{{"config", to_json(cfg)}, {"criteria", crit}, {"error", res.error}, {"exit_code", res.exit_code}};
}

/// Runs the selected stages, writes their artifacts under cfg.output_dir, then
/// evaluates the acceptance criteria of those stages and writes summary.txt
/// and summary.json. Exit code: 0 all evaluated criteria pass, 1 some fail,
/// 3 a stage raised an error (serialized into the summary).
inline RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  auto selected = [&](const std::string& m) { return opt.only.empty() || opt.only.count(m) > 0; };
  RunResult res;
  auto timed = [&](const std::string& name, auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    log << "[" << name << "] " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
        << " s\n";
  };
  try {
    write_json(dir / "config.json", to_json(cfg));
    write_profile_info(cfg.profile, dir / "profile_info.csv", 201);
    if (selected("busemann"))
      timed("busemann", [&] {
        BusemannTableOptions bo;
        bo.z_lo = 0.05 * cfg.profile.z_max;
        bo.z_hi = 0.5 * cfg.profile.z_max;
        write_busemann(cfg.profile, bo, dir / "busemann.csv", opt.jobs);
      });
    if (selected("weakkam"))
      timed("weakkam", [&] { write_weakkam(cfg, dir / "weakkam.csv", dir / "weakkam.json"); });
    if (selected("diffusion"))
      timed("diffusion", [&] {
        write_diffusion(cfg, cfg.diffusion.lambdas.back(), dir / "diffusion.json", dir / "diffusion_density.csv");
      });
    if (selected("ldp"))
      timed("ldp", [&] { write_ldp(cfg, dir, opt.jobs); });
    if (selected("comparison"))
      timed("comparison", [&] {
        CatCheckOptions co;
        co.b1 = cfg.comparison.b1;
        co.b2 = cfg.comparison.b2;
        co.trials = cfg.comparison.trials;
        co.seed = cfg.seed;
        co.a = cfg.profile.a;
        co.k = cfg.profile.k;
        co.z_max = cfg.profile.z_max;
        write_cat_check(co, dir / "cat_check.csv", opt.jobs);
      });
  } catch (const std::exception& e) {
    res.error = e.what();
  }

  std::set<int> wanted;
  for (const auto& m : pipeline_modules())
    if (selected(m))
      for (int id : criteria_for_module(m))
        wanted.insert(id);
  AcceptanceContext ctx(AcceptanceSettings::from(cfg, opt.jobs));
  for (const auto& [id, cat] : criterion_catalog()) {
    if (!res.error.empty() || !wanted.count(id)) {
      CriterionResult r;
      r.id = id;
      r.module = cat.first;
      r.check = cat.second;
      res.criteria.push_back(r);
      continue;
    }
    CriterionResult r;
    timed("criterion " + std::to_string(id), [&] { r = evaluate_criterion(ctx, id); });
    res.criteria.push_back(r);
  }
  bool all = true;
  for (const auto& c : res.criteria)
    all = all && (!c.ran || c.pass);
  res.exit_code = !res.error.empty() ? 3 : all ? 0 : 1;

  auto out = open_output(dir / "summary.txt");
  out << format_summary(cfg, res);
  out.close();
  write_json(dir / "summary.json", summary_json(cfg, res));
  return res;
}

} // namespace waistlab
