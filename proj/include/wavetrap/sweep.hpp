#pragma once
// Parameter sweeps and grid-convergence studies on top of the scenario
// driver. A sweep reruns a base scenario along one axis and fits the
// empirical constants (max value + worst consecutive jump); a convergence
// study reruns the focused residual diagnostics on dyadically refined grids
// and reports the observed orders.

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavetrap/config.hpp"
#include "wavetrap/estimates.hpp"
#include "wavetrap/scenario.hpp"
#include "wavetrap/solver.hpp"
#include "wavetrap/spectral.hpp"

namespace wavetrap {

struct SweepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Constant fitting: c_hat is the max over the series, stability the worst
// consecutive ratio (always >= 1): (5, 5, 5) -> (5, 1.0); (4, 5) -> (5, 1.25).
// ---------------------------------------------------------------------------

struct ConstantFit {
  double c_hat = 0.0;
  double stability = 1.0;
};

inline ConstantFit fit_constant(const std::vector<double>& series) {
  if (series.empty()) throw SweepError("fit_constant needs a nonempty series");
  ConstantFit f;
  f.c_hat = series.front();
  for (double v : series) f.c_hat = std::max(f.c_hat, v);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double a = std::abs(series[i]), b = std::abs(series[i + 1]);
    if (a < 1e-300 || b < 1e-300) {
      if (a >= 1e-300 || b >= 1e-300) f.stability = std::numeric_limits<double>::infinity();
      continue;  // both ~0: a flat zero series is stable
    }
    f.stability = std::max(f.stability, std::max(a / b, b / a));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

enum class SweepAxis { t_horizon, epsilon, resolution, ell };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "t_horizon" || s == "T") return SweepAxis::t_horizon;
  if (s == "epsilon" || s == "eps") return SweepAxis::epsilon;
  if (s == "resolution" || s == "h") return SweepAxis::resolution;
  if (s == "ell") return SweepAxis::ell;
  throw SweepError("unknown sweep axis '" + s + "' (t_horizon | epsilon | resolution | ell)");
}

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::t_horizon: return "t_horizon";
    case SweepAxis::epsilon: return "epsilon";
    case SweepAxis::resolution: return "resolution";
    case SweepAxis::ell: return "ell";
  }
  return "?";
}

inline ScenarioConfig patch_config(ScenarioConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::t_horizon:
      cfg.model.t_horizon = value;
      break;
    case SweepAxis::epsilon:
      cfg.model.epsilon = value;
      break;
    case SweepAxis::resolution:
      if (!cfg.grid.auto_size)
        throw SweepError("resolution sweeps need an auto-sized grid (h_target)");
      cfg.grid.h_target = value;
      break;
    case SweepAxis::ell: {
      const int ell = (int)std::lround(value);
      if (ell < 0 || std::abs(value - ell) > 1e-9) throw SweepError("ell must be a whole number");
      cfg.ells = {ell};
      break;
    }
  }
  return cfg;
}

struct SweepPoint {
  double value = 0.0;
  SummaryReport report;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::t_horizon;
  std::vector<SweepPoint> points;
  std::map<std::string, ConstantFit> fits;  // over constants shared by all points
  bool all_pass = true;
};

inline SweepResult run_sweep(const ScenarioConfig& base, SweepAxis axis,
                             const std::vector<double>& values, bool write_artifacts = false,
                             const std::string& out_root = "") {
  if (values.empty()) throw SweepError("sweep needs at least one axis value");
  SweepResult r;
  r.axis = axis;
  for (double v : values) {
    ScenarioConfig cfg = patch_config(base, axis, v);
    char tag[64];
    std::snprintf(tag, sizeof(tag), "%s_%s=%g", base.id.c_str(), axis_name(axis), v);
    cfg.id = tag;
    std::string dir;
    if (write_artifacts) {
      dir = (out_root.empty() ? cfg.run.output_dir : out_root) + "/" + tag;
    }
    SweepPoint p;
    p.value = v;
    p.report = run_scenario(cfg, write_artifacts, dir);
    r.all_pass = r.all_pass && p.report.all_pass();
    r.points.push_back(std::move(p));
  }

  // fit every constant present at all points
  for (const auto& [name, first_value] : r.points.front().report.constants) {
    std::vector<double> series = {first_value};
    bool everywhere = true;
    for (std::size_t i = 1; i < r.points.size(); ++i) {
      const auto it = r.points[i].report.constants.find(name);
      if (it == r.points[i].report.constants.end()) {
        everywhere = false;
        break;
      }
      series.push_back(it->second);
    }
    if (everywhere) r.fits[name] = fit_constant(series);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Convergence study: rerun the residual diagnostics on grids refined by 2
// in both h and dt and report the observed orders between consecutive
// levels. Needs an explicit (non-auto) base grid so the refinement is exact.
// ---------------------------------------------------------------------------

struct ConvergeLevel {
  double h = 0.0, dt = 0.0;
  double balance_residual = 0.0;
  double identity_time_l1 = 0.0;
  std::array<double, 3> identity_tau_l1{0.0, 0.0, 0.0};
  double approx_l1 = 0.0;
};

struct ConvergeResult {
  std::vector<ConvergeLevel> levels;
  // per-halving orders between consecutive levels (diagnostic detail)
  std::vector<double> balance_orders;
  std::vector<double> identity_time_orders;
  std::vector<std::array<double, 3>> identity_tau_orders;
  std::vector<double> approx_orders;
  // observed order over the whole refinement span: log2(r_first/r_last) per
  // halving. This is the headline figure; it tolerates the finest level
  // brushing the round-off floor, which a worst-consecutive-pair figure
  // would misread as an order loss.
  double balance_slope = 0.0;
  double identity_time_slope = 0.0;
  std::array<double, 3> identity_tau_slopes{0.0, 0.0, 0.0};
  double approx_slope = 0.0;
  double min_balance_order = 0.0;   // = balance_slope
  double min_identity_order = 0.0;  // min slope over the t-side, tau probes, window residual
};

inline ConvergeResult run_converge(const ScenarioConfig& base, int n_levels = 3) {
  if (n_levels < 2) throw SweepError("convergence study needs at least 2 levels");
  if (base.grid.auto_size)
    throw SweepError("convergence study needs an explicit grid (auto_size = false)");
  if (base.ells.size() != 1) throw SweepError("convergence study runs a single mode");
  if (!detail::windowed_span(base))
    throw SweepError("convergence study needs t_start <= -2 and t_horizon > 2");

  const double T = base.model.t_horizon;
  const Mode mode{base.ells[0]};
  const MultiplierSet classic = classical_multiplier(base.model.delta);

  ConvergeResult r;
  for (int k = 0; k < n_levels; ++k) {
    GridSpec grid;
    grid.half_length = base.grid.half_length;
    grid.n_points = (base.grid.n_points - 1) * (1 << k) + 1;
    grid.dt = 1.0 / (base.grid.time_divisor * (1 << k));
    grid.validate();

    EvolveOptions opts;
    opts.record_stride = (int)std::lround(base.run.record_interval *
                                          base.grid.time_divisor * (1 << k));
    opts.dense_radius = std::max(3.0, base.profile.support_radius() + 0.5);

    ModeState data;
    if (base.data.kind == DataConfig::Kind::gaussian)
      data = initial_data_gaussian(grid, gaussian_from_config(base.data));
    else
      throw SweepError("convergence study needs nonzero data");

    const Trajectory traj = evolve_from_data(base.model, base.profile, mode, grid, data,
                                             base.run.t_start, T + 2.0, opts);

    ConvergeLevel lv;
    lv.h = grid.spacing();
    lv.dt = grid.dt;
    lv.balance_residual = energy_balance_check(traj, 0.0, T).residual;
    {
      const FieldSlab slab = slab_from_dense(traj, 0.0, T);
      lv.identity_time_l1 =
          divergence_identity_residual(slab, classic, mode, base.model, base.profile).l1;
    }
    const WindowedFields wf = build_windowed_fields(traj, T);
    for (int p = 0; p < 3; ++p)
      lv.identity_tau_l1[p] =
          fourier_identity_residual(wf, kTauProbes[p], mode, base.model, base.profile).l1;
    lv.approx_l1 = approx_divergence_residual(traj, wf).l1;
    r.levels.push_back(lv);
  }

  for (int k = 0; k + 1 < n_levels; ++k) {
    const ConvergeLevel& a = r.levels[k];
    const ConvergeLevel& b = r.levels[k + 1];
    r.balance_orders.push_back(observed_order(a.balance_residual, b.balance_residual));
    r.identity_time_orders.push_back(observed_order(a.identity_time_l1, b.identity_time_l1));
    std::array<double, 3> to{};
    for (int p = 0; p < 3; ++p)
      to[p] = observed_order(a.identity_tau_l1[p], b.identity_tau_l1[p]);
    r.identity_tau_orders.push_back(to);
    r.approx_orders.push_back(observed_order(a.approx_l1, b.approx_l1));
  }

  const ConvergeLevel& first = r.levels.front();
  const ConvergeLevel& last = r.levels.back();
  const double span = n_levels - 1;
  r.balance_slope = observed_order(first.balance_residual, last.balance_residual) / span;
  r.identity_time_slope = observed_order(first.identity_time_l1, last.identity_time_l1) / span;
  for (int p = 0; p < 3; ++p)
    r.identity_tau_slopes[p] =
        observed_order(first.identity_tau_l1[p], last.identity_tau_l1[p]) / span;
  r.approx_slope = observed_order(first.approx_l1, last.approx_l1) / span;

  r.min_balance_order = r.balance_slope;
  r.min_identity_order = std::min({r.identity_time_slope, r.identity_tau_slopes[0],
                                   r.identity_tau_slopes[1], r.identity_tau_slopes[2],
                                   r.approx_slope});
  return r;
}

}  // namespace wavetrap
