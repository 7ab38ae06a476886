// waistlab command line.
//
//   waistlab [--config FILE] [--output-dir DIR] [--jobs N] [--only M,...] <subcommand> [flags]
//
// Exit codes: 0 ok, 1 an acceptance criterion (or strict comparison) failed,
// 2 bad usage / config, 3 a module raised an error.

#include "waistlab/waistlab.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <iostream>

namespace wl = waistlab;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string output_dir;
  std::string only;
  int jobs = 1;
};

wl::ExperimentConfig load(const Globals& g) {
  wl::ExperimentConfig cfg = g.config.empty() ? wl::parse_config("{}") : wl::load_config(g.config);
  if (!g.output_dir.empty())
    cfg.output_dir = g.output_dir;
  return cfg;
}

void say(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"waistlab: weak KAM, Busemann and twisted-diffusion experiments on waisted surfaces of revolution"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON); defaults when omitted")->check(CLI::ExistingFile);
  app.add_option("--output-dir", g.output_dir, "directory for artifacts (overrides output_dir)");
  app.add_option("--only", g.only, "comma-separated modules for `run`: busemann,weakkam,diffusion,ldp,comparison");
  app.add_option("--jobs", g.jobs, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

  auto* profile_cmd = app.add_subcommand("profile-info", "profile table z,r,E,G,K");
  int profile_samples = 201;
  profile_cmd->add_option("--samples", profile_samples, "heights in [-z_max, z_max]");

  auto* geo_cmd = app.add_subcommand("geodesic", "integrate one geodesic");
  double g_z = 0.0, g_theta = 0.0, g_psi = 0.0, g_horizon = 2.0 * M_PI, g_step = 1e-3;
  geo_cmd->add_option("--z", g_z, "start height");
  geo_cmd->add_option("--theta", g_theta, "start angle");
  geo_cmd->add_option("--psi", g_psi, "start direction (angle to the parallel)");
  geo_cmd->add_option("--horizon", g_horizon, "arc length");
  geo_cmd->add_option("--step", g_step, "RK4 step");

  auto* bus_cmd = app.add_subcommand("busemann", "Busemann-sum barrier table");
  std::string b_method = "both";
  wl::BusemannTableOptions bo;
  bus_cmd->add_option("--method", b_method, "quad|limit|both")->check(CLI::IsMember({"quad", "limit", "both"}));
  bus_cmd->add_option("--z-lo", bo.z_lo, "first height");
  bus_cmd->add_option("--z-hi", bo.z_hi, "last height");
  bus_cmd->add_option("--samples", bo.samples, "number of heights");
  bus_cmd->add_option("--horizon", bo.horizon, "geodesic horizon of the limit method");

  auto* wk_cmd = app.add_subcommand("weakkam", "discrete Lax-Oleinik pair, barrier and Aubry rows");

  auto* diff_cmd = app.add_subcommand("diffusion", "principal eigenpairs and stationary density");
  double d_lambda = std::nan("");
  diff_cmd->add_option("--lambda", d_lambda, "twist parameter (default: largest configured lambda)");

  auto* ldp_cmd = app.add_subcommand("ldp", "lambda sweep and rate estimates");

  auto* cat_cmd = app.add_subcommand("cat-check", "geodesic triangle angle comparison");
  wl::CatCheckOptions co;
  bool co_seed_set = false;
  cat_cmd->add_option("--b1", co.b1, "profile b of the less curved surface");
  cat_cmd->add_option("--b2", co.b2, "profile b of the more curved surface");
  cat_cmd->add_option("--trials", co.trials, "random triangles");
  cat_cmd->add_option("--seed", co.seed, "LCG seed")->each([&](const std::string&) { co_seed_set = true; });
  cat_cmd->add_flag("--strict", co.strict, "exit nonzero on the first violated trial");

  auto* run_cmd = app.add_subcommand("run", "full pipeline plus acceptance summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const wl::ExperimentConfig cfg = load(g);
    const fs::path dir = cfg.output_dir;
    if (!g.only.empty() && !run_cmd->parsed())
      throw wl::ValidationError("--only applies to `run` only");

    if (profile_cmd->parsed()) {
      wl::write_profile_info(cfg.profile, dir / "profile_info.csv", profile_samples);
      say(dir / "profile_info.csv");
    } else if (geo_cmd->parsed()) {
      const auto path = wl::write_geodesic(cfg.profile, wl::GeodesicState{{g_z, g_theta}, g_psi}, g_horizon, g_step,
                                           dir / "geodesic.csv");
      say(dir / "geodesic.csv");
      std::cout << "length " << path.total_length << ", max Clairaut drift " << path.max_drift
                << (path.clipped ? ", clipped at |z| = z_max" : "") << "\n";
    } else if (bus_cmd->parsed()) {
      bo.quad = b_method != "limit";
      bo.limit = b_method != "quad";
      const double worst = wl::write_busemann(cfg.profile, bo, dir / "busemann.csv", g.jobs);
      say(dir / "busemann.csv");
      if (bo.quad && bo.limit)
        std::cout << "max |quad - limit| = " << worst << "\n";
    } else if (wk_cmd->parsed()) {
      const auto j = wl::write_weakkam(cfg, dir / "weakkam.csv", dir / "weakkam.json");
      say(dir / "weakkam.csv");
      say(dir / "weakkam.json");
      std::cout << "c0 = " << wl::format_number(j["c0"].get<double>()) << ", aubry rows " << j["aubry_rows"].dump()
                << "\n";
    } else if (diff_cmd->parsed()) {
      const double lambda = std::isnan(d_lambda) ? cfg.diffusion.lambdas.back() : d_lambda;
      const auto j = wl::write_diffusion(cfg, lambda, dir / "diffusion.json", dir / "diffusion_density.csv");
      say(dir / "diffusion.json");
      say(dir / "diffusion_density.csv");
      std::cout << "Lambda(+lambda) = " << wl::format_number(j["Lambda_plus"].get<double>())
                << ", Lambda(-lambda) = " << wl::format_number(j["Lambda_minus"].get<double>()) << "\n";
    } else if (ldp_cmd->parsed()) {
      const auto j = wl::write_ldp(cfg, dir, g.jobs);
      say(dir / "ldp.json");
      say(dir / "ldp.csv");
      say(dir / "ldp_rate.dat");
      if (!j["fit"]["error"].get<std::string>().empty())
        std::cout << "fit: " << j["fit"]["error"].get<std::string>() << "\n";
      else
        std::cout << "fitted power " << j["fit"]["power"].get<double>() << " (expected "
                  << j["fit"]["expected_power"].get<double>() << ")\n";
    } else if (cat_cmd->parsed()) {
      co.a = cfg.profile.a;
      co.k = cfg.profile.k;
      co.z_max = cfg.profile.z_max;
      if (!co_seed_set)
        co.seed = cfg.seed;
      const auto trials = wl::write_cat_check(co, dir / "cat_check.csv", g.jobs);
      say(dir / "cat_check.csv");
      int pass = 0;
      for (const auto& t : trials)
        pass += t.pass ? 1 : 0;
      std::cout << pass << "/" << trials.size() << " trials satisfy alpha1 >= alpha2\n";
    } else if (run_cmd->parsed()) {
      wl::RunOptions ro;
      ro.only = wl::parse_only(g.only);
      ro.jobs = g.jobs;
      const auto res = wl::run_pipeline(cfg, ro, std::cerr);
      for (const auto& c : res.criteria)
        std::cout << "criterion " << c.id << ": " << (!c.ran ? "SKIPPED" : c.pass ? "PASS" : "FAIL") << "  ["
                  << c.module << " / " << c.check << "]\n";
      if (!res.error.empty())
        std::cerr << "module error: " << res.error << "\n";
      say(dir / "summary.txt");
      return res.exit_code;
    }
  } catch (const wl::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wl::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const wl::ComparisonViolation& e) {
    std::cerr << "comparison violated: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
