#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "sseek/common.hpp"
#include "sseek/occupancy_grid.hpp"
#include "sseek/rss_model.hpp"

namespace sseek {

// Scenario description: mode, geometry, repetition plan, and every module
// knob. Loaded from a JSON tree; unknown keys anywhere are errors so typos
// cannot silently change an experiment.
struct ScenarioConfig {
  enum class Mode { kModelFree, kModelBased };

  Mode mode = Mode::kModelFree;
  int n_sensors = 10;
  double formation_radius_m = 1.75;
  Vec2 source_position_m{0.0, 0.0};
  Vec2 initial_centroid_m{0.0, 0.0};
  Vec2 workspace_min_m{0.0, 0.0};
  Vec2 workspace_max_m{50.0, 50.0};
  int t_max = 30;
  int n_reps = 50;
  std::uint64_t master_seed = 1;

  std::string grid_file;  // empty: obstacle-free world
  OccupancyGrid grid;

  RssParams signal;
  double rbffd_delta = -1.0;  // resolved to 1/formation_radius when unset
  double comm_radius_m = 6.0;

  int mf_k_max = 50;
  int mf_k_meas = 10;
  double mf_gamma0 = 2.0;
  double mf_gamma_p = 0.7;
  double mf_rel_noise_var = 0.4;

  int mb_n_particles = 4000;
  int mb_n_meas_per_step = 5;
  int mb_n_z = 10;
  double mb_gamma0 = 5.0;
  double mb_gamma_p = 0.7;
  double mb_sense_radius_m = std::numeric_limits<double>::infinity();

  nlohmann::json resolved;

  const char* mode_name() const {
    return mode == Mode::kModelFree ? "model_free" : "model_based";
  }
};

namespace cfgdetail {

using nlohmann::json;

inline void require_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw config_error("unknown config key '" + (path.empty() ? key : path + "." + key) + "'");
}

template <typename T>
T get_as(const json& obj, const std::string& path, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("config key '" + (path.empty() ? key : path + "." + key) +
                       "' has the wrong type");
  }
}

inline Vec2 get_vec2(const json& obj, const std::string& path, const std::string& key,
                     Vec2 fallback, bool required = false) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.contains(key)) {
    if (required) throw config_error("missing required config key '" + full + "'");
    return fallback;
  }
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw config_error("config key '" + full + "' must be a 2-element number array");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline void check_positive(double v, const std::string& key) {
  if (!(v > 0.0)) throw config_error("config key '" + key + "' must be > 0");
}

inline void check_min_int(long long v, long long lo, const std::string& key) {
  if (v < lo)
    throw config_error("config key '" + key + "' must be >= " + std::to_string(lo));
}

}  // namespace cfgdetail

inline ScenarioConfig config_from_json(const nlohmann::json& root,
                                       const std::filesystem::path& base_dir) {
  using nlohmann::json;
  namespace cd = cfgdetail;
  if (!root.is_object()) throw config_error("config root must be an object");

  cd::require_keys(root, "",
                   {"mode", "n_sensors", "formation_radius_m", "source_position_m",
                    "initial_centroid_m", "workspace_min_m", "workspace_max_m", "t_max",
                    "n_reps", "master_seed", "environment", "signal", "rbffd", "comm", "mf",
                    "mb"});

  ScenarioConfig c;
  const std::string mode = cd::get_as<std::string>(root, "", "mode", "");
  if (mode == "model_free") c.mode = ScenarioConfig::Mode::kModelFree;
  else if (mode == "model_based") c.mode = ScenarioConfig::Mode::kModelBased;
  else throw config_error("config key 'mode' must be \"model_free\" or \"model_based\"");

  c.n_sensors = cd::get_as<int>(root, "", "n_sensors", c.n_sensors);
  cd::check_min_int(c.n_sensors, 1, "n_sensors");
  c.formation_radius_m = cd::get_as<double>(root, "", "formation_radius_m", c.formation_radius_m);
  cd::check_positive(c.formation_radius_m, "formation_radius_m");
  c.source_position_m = cd::get_vec2(root, "", "source_position_m", {}, true);
  c.initial_centroid_m = cd::get_vec2(root, "", "initial_centroid_m", {}, true);
  c.workspace_min_m = cd::get_vec2(root, "", "workspace_min_m", c.workspace_min_m);
  c.workspace_max_m = cd::get_vec2(root, "", "workspace_max_m", c.workspace_max_m);
  if (!(c.workspace_min_m.x() < c.workspace_max_m.x()) ||
      !(c.workspace_min_m.y() < c.workspace_max_m.y()))
    throw config_error("workspace_min_m must be componentwise below workspace_max_m");
  c.t_max = cd::get_as<int>(root, "", "t_max", c.t_max);
  cd::check_min_int(c.t_max, 1, "t_max");
  c.n_reps = cd::get_as<int>(root, "", "n_reps", c.n_reps);
  cd::check_min_int(c.n_reps, 1, "n_reps");
  c.master_seed = cd::get_as<std::uint64_t>(root, "", "master_seed", c.master_seed);

  if (root.contains("environment")) {
    const auto& env = root.at("environment");
    cd::require_keys(env, "environment", {"grid_file"});
    c.grid_file = cd::get_as<std::string>(env, "environment", "grid_file", "");
    if (!c.grid_file.empty()) {
      const auto path = std::filesystem::path(c.grid_file).is_absolute()
                            ? std::filesystem::path(c.grid_file)
                            : base_dir / c.grid_file;
      if (!std::filesystem::exists(path))
        throw config_error("environment.grid_file does not exist: " + path.string());
      c.grid = OccupancyGrid::load(path.string());
    }
  }

  if (root.contains("signal")) {
    const auto& s = root.at("signal");
    cd::require_keys(s, "signal",
                     {"p_tx", "g_tx", "l_tx", "g_rx", "l_rx", "freq_mhz", "alpha_multiwall",
                      "beta_wall", "rician_mu", "sigma", "rician_mu_is_mean"});
    c.signal.p_tx = cd::get_as<double>(s, "signal", "p_tx", c.signal.p_tx);
    c.signal.g_tx = cd::get_as<double>(s, "signal", "g_tx", c.signal.g_tx);
    c.signal.l_tx = cd::get_as<double>(s, "signal", "l_tx", c.signal.l_tx);
    c.signal.g_rx = cd::get_as<double>(s, "signal", "g_rx", c.signal.g_rx);
    c.signal.l_rx = cd::get_as<double>(s, "signal", "l_rx", c.signal.l_rx);
    c.signal.freq_mhz = cd::get_as<double>(s, "signal", "freq_mhz", c.signal.freq_mhz);
    c.signal.alpha_multiwall =
        cd::get_as<double>(s, "signal", "alpha_multiwall", c.signal.alpha_multiwall);
    c.signal.beta_wall = cd::get_as<double>(s, "signal", "beta_wall", c.signal.beta_wall);
    c.signal.rician_mu = cd::get_as<double>(s, "signal", "rician_mu", c.signal.rician_mu);
    c.signal.sigma = cd::get_as<double>(s, "signal", "sigma", c.signal.sigma);
    c.signal.rician_mu_is_mean =
        cd::get_as<bool>(s, "signal", "rician_mu_is_mean", c.signal.rician_mu_is_mean);
  }
  c.signal.validate();

  if (root.contains("rbffd")) {
    const auto& r = root.at("rbffd");
    cd::require_keys(r, "rbffd", {"delta"});
    c.rbffd_delta = cd::get_as<double>(r, "rbffd", "delta", c.rbffd_delta);
    cd::check_positive(c.rbffd_delta, "rbffd.delta");
  }
  if (c.rbffd_delta <= 0.0) c.rbffd_delta = 1.0 / c.formation_radius_m;

  if (root.contains("comm")) {
    const auto& cm = root.at("comm");
    cd::require_keys(cm, "comm", {"radius_m"});
    c.comm_radius_m = cd::get_as<double>(cm, "comm", "radius_m", c.comm_radius_m);
    cd::check_positive(c.comm_radius_m, "comm.radius_m");
  }

  if (root.contains("mf")) {
    const auto& m = root.at("mf");
    cd::require_keys(
        m, "mf", {"k_max", "k_meas", "gamma0", "gamma_p", "formation_radius_m", "rel_noise_var"});
    c.mf_k_max = cd::get_as<int>(m, "mf", "k_max", c.mf_k_max);
    cd::check_min_int(c.mf_k_max, 1, "mf.k_max");
    c.mf_k_meas = cd::get_as<int>(m, "mf", "k_meas", c.mf_k_meas);
    cd::check_min_int(c.mf_k_meas, 1, "mf.k_meas");
    c.mf_gamma0 = cd::get_as<double>(m, "mf", "gamma0", c.mf_gamma0);
    cd::check_positive(c.mf_gamma0, "mf.gamma0");
    c.mf_gamma_p = cd::get_as<double>(m, "mf", "gamma_p", c.mf_gamma_p);
    if (!(c.mf_gamma_p > 0.5) || !(c.mf_gamma_p <= 1.0))
      throw config_error("config key 'mf.gamma_p' must be in (0.5, 1]");
    if (m.contains("formation_radius_m") && c.mode == ScenarioConfig::Mode::kModelFree) {
      c.formation_radius_m = cd::get_as<double>(m, "mf", "formation_radius_m", c.formation_radius_m);
      cd::check_positive(c.formation_radius_m, "mf.formation_radius_m");
    }
    c.mf_rel_noise_var = cd::get_as<double>(m, "mf", "rel_noise_var", c.mf_rel_noise_var);
    cd::check_positive(c.mf_rel_noise_var, "mf.rel_noise_var");
  }

  if (root.contains("mb")) {
    const auto& m = root.at("mb");
    cd::require_keys(m, "mb",
                     {"n_particles", "n_meas_per_step", "n_z", "gamma0", "gamma_p",
                      "sense_radius_m"});
    c.mb_n_particles = cd::get_as<int>(m, "mb", "n_particles", c.mb_n_particles);
    cd::check_min_int(c.mb_n_particles, 1, "mb.n_particles");
    c.mb_n_meas_per_step = cd::get_as<int>(m, "mb", "n_meas_per_step", c.mb_n_meas_per_step);
    cd::check_min_int(c.mb_n_meas_per_step, 1, "mb.n_meas_per_step");
    c.mb_n_z = cd::get_as<int>(m, "mb", "n_z", c.mb_n_z);
    cd::check_min_int(c.mb_n_z, 1, "mb.n_z");
    c.mb_gamma0 = cd::get_as<double>(m, "mb", "gamma0", c.mb_gamma0);
    cd::check_positive(c.mb_gamma0, "mb.gamma0");
    c.mb_gamma_p = cd::get_as<double>(m, "mb", "gamma_p", c.mb_gamma_p);
    if (!(c.mb_gamma_p > 0.5) || !(c.mb_gamma_p <= 1.0))
      throw config_error("config key 'mb.gamma_p' must be in (0.5, 1]");
    if (m.contains("sense_radius_m")) {
      const auto& sr = m.at("sense_radius_m");
      if (sr.is_string() && sr.get<std::string>() == "inf")
        c.mb_sense_radius_m = std::numeric_limits<double>::infinity();
      else if (sr.is_number())
        c.mb_sense_radius_m = sr.get<double>();
      else
        throw config_error("config key 'mb.sense_radius_m' must be a number or \"inf\"");
      cd::check_positive(c.mb_sense_radius_m, "mb.sense_radius_m");
    }
  }

  // Resolved view with every default filled in, for the output copy.
  json r;
  r["mode"] = c.mode_name();
  r["n_sensors"] = c.n_sensors;
  r["formation_radius_m"] = c.formation_radius_m;
  r["source_position_m"] = {c.source_position_m.x(), c.source_position_m.y()};
  r["initial_centroid_m"] = {c.initial_centroid_m.x(), c.initial_centroid_m.y()};
  r["workspace_min_m"] = {c.workspace_min_m.x(), c.workspace_min_m.y()};
  r["workspace_max_m"] = {c.workspace_max_m.x(), c.workspace_max_m.y()};
  r["t_max"] = c.t_max;
  r["n_reps"] = c.n_reps;
  r["master_seed"] = c.master_seed;
  r["environment"]["grid_file"] = c.grid_file;
  r["signal"] = {{"p_tx", c.signal.p_tx},
                 {"g_tx", c.signal.g_tx},
                 {"l_tx", c.signal.l_tx},
                 {"g_rx", c.signal.g_rx},
                 {"l_rx", c.signal.l_rx},
                 {"freq_mhz", c.signal.freq_mhz},
                 {"alpha_multiwall", c.signal.alpha_multiwall},
                 {"beta_wall", c.signal.beta_wall},
                 {"rician_mu", c.signal.rician_mu},
                 {"sigma", c.signal.sigma},
                 {"rician_mu_is_mean", c.signal.rician_mu_is_mean}};
  r["rbffd"]["delta"] = c.rbffd_delta;
  r["comm"]["radius_m"] = c.comm_radius_m;
  r["mf"] = {{"k_max", c.mf_k_max},
             {"k_meas", c.mf_k_meas},
             {"gamma0", c.mf_gamma0},
             {"gamma_p", c.mf_gamma_p},
             {"rel_noise_var", c.mf_rel_noise_var}};
  r["mb"] = {{"n_particles", c.mb_n_particles},
             {"n_meas_per_step", c.mb_n_meas_per_step},
             {"n_z", c.mb_n_z},
             {"gamma0", c.mb_gamma0},
             {"gamma_p", c.mb_gamma_p},
             {"sense_radius_m",
              std::isinf(c.mb_sense_radius_m) ? json("inf") : json(c.mb_sense_radius_m)}};
  c.resolved = std::move(r);
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(root, path.parent_path());
}

}  // namespace sseek
