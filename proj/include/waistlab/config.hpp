#pragma once

// Experiment configuration: JSON in, fully validated struct out.
//
// Defaults (one table, used whenever a key is absent):
//
//   key                          default              meaning
//   profile.a, .b, .k, .z_max    1, 1, 2, 1           r(z) = a + b |z|^(2+k)
//   profile.allow_noneven_k      false                accept odd / real k > 0
//   omega_coefficient            a                    c in omega = c dtheta
//   grid.n_theta, grid.n_z       192, 193             n_z odd (waist row)
//   weakkam.tau_factor           2                    one-step time tau = tau_factor * a
//   weakkam.tol                  1e-8                 fixed-point oscillation
//   weakkam.max_iter             200000
//   weakkam.aubry_tol            1e-9                 barrier threshold for the Aubry set
//   diffusion.lambdas            [8, 16, 32, 64]      ascending
//   diffusion.boundary           "reflecting"         only value supported
//   bands                        see default_bands()  z_hi <= z_max / 2
//   comparison.b1, .b2, .trials  0.5, 2, 20
//   output_dir                   "waistlab-out"
//   seed                         20240611
//
// Unknown keys are rejected. Syntax errors raise ParseError with the line;
// type errors raise ParseError with the key path; violated preconditions raise
// ValidationError.

#include "waistlab/errors.hpp"
#include "waistlab/grid.hpp"
#include "waistlab/ldp.hpp"
#include "waistlab/surface.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace waistlab {

struct WeakKamConfig {
  double tau_factor = 2.0;
  double tol = 1e-8;
  int max_iter = 200000;
  double aubry_tol = 1e-9;
};

struct DiffusionConfig {
  std::vector<double> lambdas{8.0, 16.0, 32.0, 64.0};
  std::string boundary = "reflecting";
};

struct ComparisonConfig {
  double b1 = 0.5;
  double b2 = 2.0;
  int trials = 20;
};

inline std::vector<Band> default_bands() {
  return {{0.0, 0.05}, {0.15, 0.25}, {0.2, 0.3}, {0.25, 0.35}, {0.3, 0.4}, {0.35, 0.45}};
}

struct ExperimentConfig {
  RevolutionProfile profile{1.0, 1.0, 2.0, 1.0};
  bool allow_noneven_k = false;
  double omega_coefficient = -1.0; ///< negative: use profile.a
  GridSpec grid{};
  WeakKamConfig weakkam{};
  DiffusionConfig diffusion{};
  std::vector<Band> bands = default_bands();
  ComparisonConfig comparison{};
  std::string output_dir = "waistlab-out";
  std::uint64_t seed = 20240611;

  double c() const { return omega_coefficient < 0.0 ? profile.a : omega_coefficient; }
  double tau() const { return weakkam.tau_factor * profile.a; }
  Grid make_grid() const { return Grid(grid.n_theta, grid.n_z, profile.z_max); }
};

/// Throws ValidationError naming the first violated precondition.
inline void validate(const ExperimentConfig& c) {
  validate(c.profile, c.allow_noneven_k);
  if (c.omega_coefficient >= 0.0 && !std::isfinite(c.omega_coefficient))
    throw ValidationError("omega_coefficient must be finite");
  if (c.grid.n_theta < 32 || c.grid.n_z < 33)
    throw ValidationError("grid: n_theta >= 32 and n_z >= 33 required");
  if (c.grid.n_z % 2 == 0)
    throw ValidationError("grid: n_z must be odd so that z = 0 is a grid row");
  if (!(c.weakkam.tau_factor > 0.0))
    throw ValidationError("weakkam: tau_factor must be > 0");
  if (!(c.weakkam.tol > 0.0))
    throw ValidationError("weakkam: tol must be > 0");
  if (c.weakkam.max_iter < 1)
    throw ValidationError("weakkam: max_iter must be >= 1");
  if (!(c.weakkam.aubry_tol > 0.0))
    throw ValidationError("weakkam: aubry_tol must be > 0");
  if (c.diffusion.boundary != "reflecting")
    throw ValidationError("diffusion: boundary must be \"reflecting\"");
  if (c.diffusion.lambdas.size() < 4)
    throw ValidationError("diffusion: at least 4 lambdas required");
  if (!(c.comparison.b1 > 0.0) || !(c.comparison.b2 >= c.comparison.b1))
    throw ValidationError("comparison: need 0 < b1 <= b2");
  if (c.comparison.trials < 1)
    throw ValidationError("comparison: trials must be >= 1");
  if (c.output_dir.empty())
    throw ValidationError("output_dir must not be empty");
  validate_sweep(c.profile, c.diffusion.lambdas, c.bands);
}

namespace cfg_detail {

using nlohmann::json;

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ParseError("key '" + where + "': expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      throw ParseError("unknown key '" + (where.empty() ? it.key() : where + "." + it.key()) + "'");
}

inline std::string join(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

inline void get(const json& j, const std::string& where, const char* key, double& out) {
  if (!j.contains(key))
    return;
  const auto& v = j.at(key);
  if (!v.is_number())
    throw ParseError("key '" + join(where, key) + "': expected a number");
  out = v.get<double>();
}

inline void get(const json& j, const std::string& where, const char* key, int& out) {
  if (!j.contains(key))
    return;
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    throw ParseError("key '" + join(where, key) + "': expected an integer");
  out = v.get<int>();
}

inline void get(const json& j, const std::string& where, const char* key, bool& out) {
  if (!j.contains(key))
    return;
  const auto& v = j.at(key);
  if (!v.is_boolean())
    throw ParseError("key '" + join(where, key) + "': expected true or false");
  out = v.get<bool>();
}

inline void get(const json& j, const std::string& where, const char* key, std::string& out) {
  if (!j.contains(key))
    return;
  const auto& v = j.at(key);
  if (!v.is_string())
    throw ParseError("key '" + join(where, key) + "': expected a string");
  out = v.get<std::string>();
}

inline int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

} // namespace cfg_detail

inline ExperimentConfig parse_config(const std::string& text) {
  using nlohmann::json;
  using namespace cfg_detail;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
  }
  ExperimentConfig c;
  only_keys(root, "",
            {"profile", "omega_coefficient", "grid", "weakkam", "diffusion", "bands", "comparison", "output_dir", "seed"});
  if (root.contains("profile")) {
    const auto& p = root["profile"];
    only_keys(p, "profile", {"a", "b", "k", "z_max", "allow_noneven_k"});
    get(p, "profile", "a", c.profile.a);
    get(p, "profile", "b", c.profile.b);
    get(p, "profile", "k", c.profile.k);
    get(p, "profile", "z_max", c.profile.z_max);
    get(p, "profile", "allow_noneven_k", c.allow_noneven_k);
  }
  get(root, "", "omega_coefficient", c.omega_coefficient);
  if (root.contains("omega_coefficient") && !(c.omega_coefficient > 0.0))
    throw ValidationError("omega_coefficient must be > 0");
  if (root.contains("grid")) {
    const auto& g = root["grid"];
    only_keys(g, "grid", {"n_theta", "n_z"});
    get(g, "grid", "n_theta", c.grid.n_theta);
    get(g, "grid", "n_z", c.grid.n_z);
  }
  if (root.contains("weakkam")) {
    const auto& w = root["weakkam"];
    only_keys(w, "weakkam", {"tau_factor", "tol", "max_iter", "aubry_tol"});
    get(w, "weakkam", "tau_factor", c.weakkam.tau_factor);
    get(w, "weakkam", "tol", c.weakkam.tol);
    get(w, "weakkam", "max_iter", c.weakkam.max_iter);
    get(w, "weakkam", "aubry_tol", c.weakkam.aubry_tol);
  }
  if (root.contains("diffusion")) {
    const auto& d = root["diffusion"];
    only_keys(d, "diffusion", {"lambdas", "boundary"});
    if (d.contains("lambdas")) {
      if (!d["lambdas"].is_array())
        throw ParseError("key 'diffusion.lambdas': expected an array of numbers");
      c.diffusion.lambdas.clear();
      for (const auto& v : d["lambdas"]) {
        if (!v.is_number())
          throw ParseError("key 'diffusion.lambdas': expected an array of numbers");
        c.diffusion.lambdas.push_back(v.get<double>());
      }
    }
    get(d, "diffusion", "boundary", c.diffusion.boundary);
  }
  if (root.contains("bands")) {
    if (!root["bands"].is_array())
      throw ParseError("key 'bands': expected an array");
    c.bands.clear();
    for (std::size_t i = 0; i < root["bands"].size(); ++i) {
      const auto& b = root["bands"][i];
      const std::string where = "bands[" + std::to_string(i) + "]";
      only_keys(b, where, {"z_lo", "z_hi"});
      if (!b.contains("z_lo") || !b.contains("z_hi"))
        throw ParseError("key '" + where + "': z_lo and z_hi are required");
      Band band;
      get(b, where, "z_lo", band.z_lo);
      get(b, where, "z_hi", band.z_hi);
      c.bands.push_back(band);
    }
  }
  if (root.contains("comparison")) {
    const auto& m = root["comparison"];
    only_keys(m, "comparison", {"b1", "b2", "trials"});
    get(m, "comparison", "b1", c.comparison.b1);
    get(m, "comparison", "b2", c.comparison.b2);
    get(m, "comparison", "trials", c.comparison.trials);
  }
  get(root, "", "output_dir", c.output_dir);
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned())
      throw ParseError("key 'seed': expected a nonnegative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// The effective configuration, defaults included.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["profile"] = {{"a", c.profile.a},
                  {"b", c.profile.b},
                  {"k", c.profile.k},
                  {"z_max", c.profile.z_max},
                  {"allow_noneven_k", c.allow_noneven_k}};
  j["omega_coefficient"] = c.c();
  j["grid"] = {{"n_theta", c.grid.n_theta}, {"n_z", c.grid.n_z}};
  j["weakkam"] = {{"tau_factor", c.weakkam.tau_factor},
                  {"tol", c.weakkam.tol},
                  {"max_iter", c.weakkam.max_iter},
                  {"aubry_tol", c.weakkam.aubry_tol}};
  j["diffusion"] = {{"lambdas", c.diffusion.lambdas}, {"boundary", c.diffusion.boundary}};
  j["bands"] = nlohmann::json::array();
  for (const auto& b : c.bands)
    j["bands"].push_back({{"z_lo", b.z_lo}, {"z_hi", b.z_hi}});
  j["comparison"] = {{"b1", c.comparison.b1}, {"b2", c.comparison.b2}, {"trials", c.comparison.trials}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

} // namespace waistlab
