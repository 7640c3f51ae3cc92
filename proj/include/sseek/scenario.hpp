#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>
#include <vector>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"
#include "sseek/config.hpp"
#include "sseek/flooding.hpp"
#include "sseek/metrics.hpp"
#include "sseek/particle_set.hpp"
#include "sseek/rng.hpp"
#include "sseek/rss_model.hpp"
#include "sseek/seek_model_based.hpp"
#include "sseek/seek_model_free.hpp"

namespace sseek {

struct ScenarioResult {
  MetricsTable table;
  std::vector<std::string> rep_errors;  // one entry per failed repetition
  double final_mean = std::numeric_limits<double>::quiet_NaN();
  double final_std = std::numeric_limits<double>::quiet_NaN();
  std::string summary;
};

namespace scenario_detail {

inline std::vector<Vec2> ring_formation(int n, double radius, const Vec2& center) {
  std::vector<Vec2> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n;
    out.push_back(center + radius * Vec2(std::cos(th), std::sin(th)));
  }
  return out;
}

inline double angle_between_deg(const Vec2& a, const Vec2& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

struct RepOutcome {
  bool ok = true;
  std::string error;
  std::vector<MetricsRow> rows;
};

inline RepOutcome run_mf_rep(const ScenarioConfig& cfg, int rep) {
  RepOutcome out;
  const RssModel model(cfg.grid, cfg.signal);
  const StepSchedule schedule(cfg.mf_gamma0, cfg.mf_gamma_p);
  RelMeasModel rel;
  rel.cov = cfg.mf_rel_noise_var * Eigen::Matrix2d::Identity();

  std::vector<Vec2> positions =
      ring_formation(cfg.n_sensors, cfg.formation_radius_m, cfg.initial_centroid_m);
  // The formation the sensors believe they are in (sensor-0 frame prior).
  const auto nominal_vec = ring_formation(cfg.n_sensors, cfg.formation_radius_m, {0.0, 0.0});
  Eigen::Matrix2Xd nominal(2, cfg.n_sensors);
  for (int i = 0; i < cfg.n_sensors; ++i) nominal.col(i) = nominal_vec[i];

  for (int t = 0; t < cfg.t_max; ++t) {
    const CommGraph graph = CommGraph::from_positions(positions, cfg.comm_radius_m);
    MfPipeline pipeline(graph, model, rel, cfg.rbffd_delta, cfg.mf_k_meas, nominal);
    auto nodes = mf_init_nodes(pipeline);
    Rng rng = make_rng({cfg.master_seed, static_cast<std::uint64_t>(rep),
                        hash_tag("mf_fast"), static_cast<std::uint64_t>(t)});
    for (int k = 0; k < cfg.mf_k_max; ++k)
      mf_fast_round(pipeline, positions, cfg.source_position_m, nodes, k, rng);
    const auto controls = distributed_mf_controls(nodes, schedule, t);

    // Reference for the gradient metrics: noise-free centralized FD gradient
    // at the true configuration.
    Eigen::Matrix2Xd true_pos(2, cfg.n_sensors);
    VectorXd h(cfg.n_sensors);
    for (int i = 0; i < cfg.n_sensors; ++i) {
      true_pos.col(i) = positions[i];
      h(i) = model.mean(positions[i], cfg.source_position_m);
    }
    const FdWeights w_true = fd_weights(true_pos, cfg.rbffd_delta);
    const Vec2 g_ref = gradient_estimate(w_true, h);

    double mag_acc = 0.0, dir_acc = 0.0, pose_acc = 0.0;
    for (int i = 0; i < cfg.n_sensors; ++i) {
      const Vec2 est = static_cast<double>(cfg.n_sensors) * nodes[i].r;
      const double dmag = est.norm() - g_ref.norm();
      mag_acc += dmag * dmag;
      const double ddir = angle_between_deg(est, g_ref);
      dir_acc += ddir * ddir;
      double node_err = 0.0;
      for (int j = 0; j < cfg.n_sensors; ++j) {
        const Vec2 truth = positions[j] - positions[0];
        node_err += (nodes[i].x_est.col(j) - truth).squaredNorm();
      }
      pose_acc += std::sqrt(node_err / cfg.n_sensors);
    }

    for (int i = 0; i < cfg.n_sensors; ++i) positions[i] += controls[i];
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : positions) centroid += p;
    centroid /= cfg.n_sensors;

    out.rows.push_back({rep, t,
                        {(centroid - cfg.source_position_m).norm(),
                         std::sqrt(mag_acc / cfg.n_sensors), std::sqrt(dir_acc / cfg.n_sensors),
                         pose_acc / cfg.n_sensors}});
  }
  return out;
}

inline RepOutcome run_mb_rep(const ScenarioConfig& cfg, int rep) {
  RepOutcome out;
  const RssModel model(cfg.grid, cfg.signal);
  const StepSchedule schedule(cfg.mb_gamma0, cfg.mb_gamma_p);
  const MiSampleBudget budget(cfg.mb_n_z);

  std::vector<Vec2> positions =
      ring_formation(cfg.n_sensors, cfg.formation_radius_m, cfg.initial_centroid_m);

  Rng part_rng = make_rng({cfg.master_seed, static_cast<std::uint64_t>(rep),
                           hash_tag("mb_particles")});
  const ParticleSet prototype = ParticleSet::uniform_box(cfg.mb_n_particles, cfg.workspace_min_m,
                                                         cfg.workspace_max_m, part_rng);
  std::vector<ParticleSet> sets(cfg.n_sensors, prototype);

  const std::uint64_t mi_seed =
      derive_seed({cfg.master_seed, static_cast<std::uint64_t>(rep), hash_tag("mb_mi")});

  for (int t = 0; t < cfg.t_max; ++t) {
    const CommGraph graph = CommGraph::from_positions(positions, cfg.comm_radius_m);
    const MbField field(model, positions, prototype.shared_positions());

    Rng meas_rng = make_rng({cfg.master_seed, static_cast<std::uint64_t>(rep),
                             hash_tag("mb_meas"), static_cast<std::uint64_t>(t)});
    std::vector<MeasPoint> true_points;
    true_points.reserve(cfg.n_sensors);
    for (int i = 0; i < cfg.n_sensors; ++i)
      true_points.push_back(model.prepare(positions[i], cfg.source_position_m));

    for (int s = 0; s < cfg.mb_n_meas_per_step; ++s) {
      std::vector<double> z(cfg.n_sensors);
      for (int i = 0; i < cfg.n_sensors; ++i) z[i] = model.sample(true_points[i], meas_rng);
      std::vector<VectorXd> new_lw(cfg.n_sensors);
      for (int i = 0; i < cfg.n_sensors; ++i)
        new_lw[i] = dpf_step(graph, i, sets, [&](Eigen::Index m, const Vec2&) {
          return model.log_pdf(field.point(i, m), z[i]);
        });
      for (int i = 0; i < cfg.n_sensors; ++i) sets[i].set_log_weights(std::move(new_lw[i]), true);
    }

    const auto known = flood_states(graph, positions, cfg.comm_radius_m, cfg.mb_sense_radius_m);

    std::vector<Vec2> controls(cfg.n_sensors, Vec2::Zero());
    for (int i = 0; i < cfg.n_sensors; ++i) {
      auto group = overlap_set(i, known[i], cfg.mb_sense_radius_m);
      group.push_back(i);
      std::sort(group.begin(), group.end());
      Rng mi_rng = make_group_rng(mi_seed, t, group);
      if (static_cast<int>(group.size()) == cfg.n_sensors) {
        // Full overlap: reuse the shared prepared field.
        MiEvaluator ev(field, sets[i].log_weights(), {i});
        controls[i] = schedule.at(t) * ev.mi_gradient(budget, mi_rng).segment<2>(0);
      } else {
        std::vector<Vec2> xs;
        int block = 0;
        for (size_t k = 0; k < group.size(); ++k) {
          xs.push_back(*known[i][group[k]]);
          if (group[k] == i) block = static_cast<int>(k);
        }
        MbField sub(model, xs, prototype.shared_positions());
        MiEvaluator ev(sub, sets[i].log_weights(), {block});
        controls[i] = schedule.at(t) * ev.mi_gradient(budget, mi_rng).segment<2>(0);
      }
    }
    for (int i = 0; i < cfg.n_sensors; ++i) positions[i] += controls[i];

    const Vec2 est = sets[0].posterior_mean();
    out.rows.push_back(
        {rep, t, {(est - cfg.source_position_m).norm(), sets[0].ess()}});
  }
  return out;
}

}  // namespace scenario_detail

// Runs n_reps independent repetitions with rng streams derived from
// (master_seed, rep); failures are recorded per repetition and do not stop
// the batch. Rows come out in (rep, t) order regardless of thread count.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, unsigned n_threads = 0) {
  using scenario_detail::RepOutcome;
  if (n_threads == 0)
    n_threads = std::max(1u, std::min(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cfg.n_reps)));

  std::vector<RepOutcome> outcomes(cfg.n_reps);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.n_reps) return;
      try {
        outcomes[rep] = cfg.mode == ScenarioConfig::Mode::kModelFree
                            ? scenario_detail::run_mf_rep(cfg, rep)
                            : scenario_detail::run_mb_rep(cfg, rep);
      } catch (const std::exception& e) {
        outcomes[rep].ok = false;
        outcomes[rep].error = e.what();
        outcomes[rep].rows.clear();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ScenarioResult res;
  res.table.columns = cfg.mode == ScenarioConfig::Mode::kModelFree
                          ? std::vector<std::string>{"centroid_err_m", "grad_mag_rmse",
                                                     "grad_dir_rmse_deg", "pose_rmse_m"}
                          : std::vector<std::string>{"src_est_err_m", "particle_ess"};
  for (int rep = 0; rep < cfg.n_reps; ++rep) {
    if (!outcomes[rep].ok) {
      res.rep_errors.push_back("rep " + std::to_string(rep) + ": " + outcomes[rep].error);
      continue;
    }
    for (auto& row : outcomes[rep].rows) res.table.rows.push_back(std::move(row));
  }

  // Final-step aggregate of the primary error metric.
  double acc = 0.0, acc2 = 0.0;
  int count = 0;
  for (const auto& row : res.table.rows)
    if (row.t == cfg.t_max - 1) {
      acc += row.values[0];
      acc2 += row.values[0] * row.values[0];
      ++count;
    }
  if (count > 0) {
    res.final_mean = acc / count;
    res.final_std = std::sqrt(std::max(0.0, acc2 / count - res.final_mean * res.final_mean));
  }

  std::ostringstream sum;
  char buf[64];
  sum << "mode: " << cfg.mode_name() << "\n";
  sum << "reps: " << cfg.n_reps << " (failed: " << res.rep_errors.size() << ")\n";
  sum << "t_max: " << cfg.t_max << "\n";
  std::snprintf(buf, sizeof(buf), "%.6g", res.final_mean);
  sum << "final " << res.table.columns[0] << " mean: " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.6g", res.final_std);
  sum << "final " << res.table.columns[0] << " std: " << buf << "\n";
  for (const auto& e : res.rep_errors) sum << "error: " << e << "\n";
  res.summary = sum.str();
  return res;
}

inline void write_outputs(const ScenarioResult& res, const ScenarioConfig& cfg,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "metrics.csv");
    if (!csv) throw config_error("cannot write " + (out_dir / "metrics.csv").string());
    res.table.write_csv(csv);
  }
  {
    std::ofstream sum(out_dir / "summary.txt");
    sum << res.summary;
  }
  {
    std::ofstream cfg_out(out_dir / "config.json");
    cfg_out << cfg.resolved.dump(2) << "\n";
  }
}

}  // namespace sseek
