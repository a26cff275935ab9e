#pragma once
// Method-of-lines evolution of the per-mode equation
//
//   u_t = v
//   v_t = D2 u - (ell(ell+1) + N) V u + i eps W u
//
// with a 4th-order centered stencil D2 on a uniform grid, homogeneous
// Dirichlet walls, and a degree-8 truncated-exponential (Taylor) one-step
// integrator: z_{n+1} = sum_{j<=8} (dt A)^j z_n / j!. The system is linear
// and autonomous, so this is a bona fide one-step method of order 8 in time;
// the overall declared order is p = 4, dominated by the spatial stencil.
// Degree 8 satisfies |T8(i y)| <= 1 for |y| <= 1.3 (checked against the
// stencil's spectral radius at construction), so round-off in unresolved
// grid modes is never amplified and the measured energy drift at eps = 0 is
// set by the spatial discretization alone.
//
// A trajectory records two views of the run:
//   * full-domain states every `record_stride` steps (energies, bulk
//     integrals, identity residuals),
//   * a dense per-step log of u, v restricted to |x| <= dense_radius
//     (windowed fields, time transforms, slab integrals near the trap).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavetrap/model.hpp"
#include "wavetrap/numerics.hpp"

namespace wavetrap {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InstabilityError : SolverError {
  using SolverError::SolverError;
};
struct CausalityError : SolverError {
  using SolverError::SolverError;
};

// ---------------------------------------------------------------------------

struct EvolveOptions {
  int record_stride = 1;      // full-state recording period, must divide step count
  double dense_radius = 3.0;  // half-width of the dense per-step log; 0 disables
  int taylor_degree = 8;
  double instability_factor = 1e6;
  bool check_causality = true;
};

struct Trajectory {
  GridSpec grid;
  Mode mode;
  ModelParams params;
  PotentialProfile profile;
  int record_stride = 1;

  std::vector<double> times;      // coarse sample times, uniform spacing
  std::vector<ModeState> states;  // aligned with times

  // dense log: every step, x restricted to index range [dense_lo, dense_hi]
  int dense_lo = 0, dense_hi = -1;  // inclusive; empty when hi < lo
  std::vector<double> dense_times;
  std::vector<std::vector<cplx>> dense_u, dense_v;

  double record_dt() const { return grid.dt * record_stride; }
  int dense_width() const { return dense_hi >= dense_lo ? dense_hi - dense_lo + 1 : 0; }

  // Lookups demand lattice times: tolerating anything beyond accumulated
  // round-off (~1e-11 after 10^4 steps) would silently hand back a neighbor.
  std::size_t index_of_time(double t) const {
    if (times.empty()) throw SolverError("trajectory has no recorded states");
    const double d = record_dt();
    const long k = std::lround((t - times.front()) / d);
    if (k < 0 || k >= (long)times.size() || std::abs(times[k] - t) > 1e-9)
      throw SolverError("time " + std::to_string(t) + " is not a recorded sample");
    return (std::size_t)k;
  }
  std::size_t dense_index_of_time(double t) const {
    if (dense_times.empty()) throw SolverError("trajectory has no dense log");
    const double d = dense_times.size() > 1 ? dense_times[1] - dense_times[0] : grid.dt;
    const long k = std::lround((t - dense_times.front()) / d);
    if (k < 0 || k >= (long)dense_times.size() || std::abs(dense_times[k] - t) > 1e-9)
      throw SolverError("time " + std::to_string(t) + " is not in the dense log");
    return (std::size_t)k;
  }
};

// ---------------------------------------------------------------------------
// Generator application and the Taylor step. The stencil runs over the
// interleaved real/imaginary doubles so the compiler can vectorize it as a
// plain contiguous loop.
// ---------------------------------------------------------------------------

namespace detail {

struct Generator {
  int n = 0;
  double inv_h2 = 0.0;
  std::vector<double> c;   // (ell(ell+1)+N) V(x_i)
  std::vector<double> ew;  // eps W(x_i)

  Generator(const ModelParams& p, const PotentialProfile& prof, const Mode& m,
            const GridSpec& g) {
    n = g.n_points;
    const double h = g.spacing();
    inv_h2 = 1.0 / (h * h);
    c.resize(n);
    ew.resize(n);
    for (int i = 0; i < n; ++i) {
      c[i] = mode_equation_coefficient(m, p, g.x(i));
      ew[i] = p.epsilon * potential_w(prof, g.x(i));
    }
    // stability: degree-8 truncated exponential is non-amplifying on the
    // imaginary axis up to |y| ~ 3.39; we insist on comfortable margin.
    const double omega_max = std::sqrt(16.0 / 3.0 * inv_h2 + c[n / 2]);
    if (omega_max * g.dt > 1.3)
      throw SolverError("dt too large for the degree-8 stepper: omega_max*dt = " +
                        std::to_string(omega_max * g.dt) + " > 1.3; reduce the cfl factor");
  }

  // (out_u, out_v) = A (u, v)
  void apply(const std::vector<cplx>& u, const std::vector<cplx>& v,
             std::vector<cplx>& out_u, std::vector<cplx>& out_v) const {
    out_u = v;  // first component is a copy
    out_u[0] = out_u[n - 1] = 0.0;
    // 4th-order interior stencil on the interleaved view
    const double* a = reinterpret_cast<const double*>(u.data());
    double* b = reinterpret_cast<double*>(out_v.data());
    const double s0 = -30.0 / 12.0 * inv_h2, s1 = 16.0 / 12.0 * inv_h2,
                 s2 = -1.0 / 12.0 * inv_h2;
    for (int j = 4; j < 2 * n - 4; ++j) {
      b[j] = s2 * a[j - 4] + s1 * a[j - 2] + s0 * a[j] + s1 * a[j + 2] + s2 * a[j + 4];
    }
    // second-order fallback one point from each wall (fields are ~0 there)
    for (int i : {1, n - 2}) {
      out_v[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
    }
    out_v[0] = out_v[n - 1] = 0.0;
    // potential terms: -c u + i eps W u
    for (int i = 1; i < n - 1; ++i) {
      out_v[i] += -c[i] * u[i] + cplx(0.0, ew[i]) * u[i];
    }
  }
};

struct StepScratch {
  std::vector<cplx> wu, wv, au, av;
  void resize(int n) {
    wu.resize(n);
    wv.resize(n);
    au.resize(n);
    av.resize(n);
  }
};

// One step of size dt (dt may be negative for the backward leg).
inline void taylor_step(const Generator& gen, double dt, int degree, std::vector<cplx>& u,
                        std::vector<cplx>& v, StepScratch& s) {
  const int n = gen.n;
  s.wu = u;
  s.wv = v;
  for (int j = 1; j <= degree; ++j) {
    gen.apply(s.wu, s.wv, s.au, s.av);
    const double scale = dt / j;
    for (int i = 0; i < n; ++i) {
      s.wu[i] = s.au[i] * scale;
      s.wv[i] = s.av[i] * scale;
      u[i] += s.wu[i];
      v[i] += s.wv[i];
    }
  }
}

inline double max_abs(const std::vector<cplx>& a) {
  double m = 0.0;
  for (const cplx& z : a) m = std::max(m, std::max(std::abs(z.real()), std::abs(z.imag())));
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward evolution from init.time to t_end (t_end > init.time). The step
// count is round((t_end - init.time)/dt), so the final recorded time matches
// t_end to within dt/2; it must be a multiple of record_stride.
// ---------------------------------------------------------------------------

inline Trajectory evolve_mode(const ModelParams& params, const PotentialProfile& profile,
                              const Mode& mode, const GridSpec& grid, const ModeState& init,
                              double t_end, const EvolveOptions& opts = {}) {
  params.validate();
  profile.validate();
  mode.validate();
  grid.validate();
  init.validate(grid);
  if (!(t_end > init.time)) throw SolverError("evolve_mode needs t_end > initial time");
  if (opts.record_stride < 1) throw SolverError("record_stride must be >= 1");

  const long n_steps = std::lround((t_end - init.time) / grid.dt);
  if (n_steps < 1) throw SolverError("evolution span shorter than one step");
  if (std::abs(init.time + n_steps * grid.dt - t_end) > 0.5 * grid.dt)
    throw SolverError("t_end is not reachable within dt/2 of a whole number of steps");
  if (n_steps % opts.record_stride != 0)
    throw SolverError("step count " + std::to_string(n_steps) + " is not a multiple of record_stride " +
                      std::to_string(opts.record_stride));

  detail::Generator gen(params, profile, mode, grid);
  detail::StepScratch scratch;
  scratch.resize(grid.n_points);

  Trajectory traj;
  traj.grid = grid;
  traj.mode = mode;
  traj.params = params;
  traj.profile = profile;
  traj.record_stride = opts.record_stride;

  // dense window indices
  if (opts.dense_radius > 0.0) {
    traj.dense_lo = std::max(0, (int)std::ceil((-opts.dense_radius + grid.half_length) / grid.spacing()));
    traj.dense_hi = std::min(grid.n_points - 1,
                             (int)std::floor((opts.dense_radius + grid.half_length) / grid.spacing()));
  }

  const double norm0 = std::max({detail::max_abs(init.u), detail::max_abs(init.v), 1e-30});
  const double blowup = opts.instability_factor * norm0;

  std::vector<cplx> u = init.u, v = init.v;
  traj.states.reserve(n_steps / opts.record_stride + 1);
  traj.dense_times.reserve(traj.dense_width() ? n_steps + 1 : 0);

  auto record = [&](long step) {
    const double t = init.time + step * grid.dt;
    if (step % opts.record_stride == 0) {
      traj.times.push_back(t);
      traj.states.push_back(ModeState{u, v, t});
      if (opts.check_causality) {
        double edge = 0.0;
        for (int i = 0; i < 5; ++i) {
          edge = std::max({edge, std::abs(u[i]), std::abs(v[i]), std::abs(u[grid.n_points - 1 - i]),
                           std::abs(v[grid.n_points - 1 - i])});
        }
        if (edge > 1e-12 * std::max(1.0, norm0))
          throw CausalityError("field reached the grid boundary at t = " + std::to_string(t) +
                               " (edge amplitude " + std::to_string(edge) + "); enlarge half_length");
      }
    }
    if (traj.dense_width() > 0) {
      traj.dense_times.push_back(t);
      traj.dense_u.emplace_back(u.begin() + traj.dense_lo, u.begin() + traj.dense_hi + 1);
      traj.dense_v.emplace_back(v.begin() + traj.dense_lo, v.begin() + traj.dense_hi + 1);
    }
  };

  record(0);
  for (long step = 1; step <= n_steps; ++step) {
    detail::taylor_step(gen, grid.dt, opts.taylor_degree, u, v, scratch);
    record(step);
    if (step % 128 == 0 || step == n_steps) {
      if (detail::max_abs(u) > blowup || detail::max_abs(v) > blowup)
        throw InstabilityError("field norm exceeded " + std::to_string(opts.instability_factor) +
                               " x initial norm at t = " + std::to_string(init.time + step * grid.dt));
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Two-leg evolution: data is given at t = 0; the trajectory covers
// [t_start, t_end] with t_start <= 0 <= t_end by evolving backward from the
// data and then forward, sharing the t = 0 sample.
// ---------------------------------------------------------------------------

inline Trajectory evolve_from_data(const ModelParams& params, const PotentialProfile& profile,
                                   const Mode& mode, const GridSpec& grid, const ModeState& data,
                                   double t_start, double t_end, const EvolveOptions& opts = {}) {
  if (data.time != 0.0) throw SolverError("evolve_from_data expects data at t = 0");
  if (!(t_start <= 0.0 && t_end > t_start)) throw SolverError("need t_start <= 0 < t_end");
  if (t_start == 0.0) return evolve_mode(params, profile, mode, grid, data, t_end, opts);

  // Backward leg: step the same generator with -dt, then reverse the records.
  params.validate();
  profile.validate();
  grid.validate();
  data.validate(grid);
  const long n_back = std::lround(-t_start / grid.dt);
  if (n_back % opts.record_stride != 0)
    throw SolverError("backward step count is not a multiple of record_stride");

  detail::Generator gen(params, profile, mode, grid);
  detail::StepScratch scratch;
  scratch.resize(grid.n_points);
  std::vector<cplx> u = data.u, v = data.v;

  Trajectory back;  // filled in reverse time order, flipped afterwards
  back.grid = grid;
  if (opts.dense_radius > 0.0) {
    back.dense_lo = std::max(0, (int)std::ceil((-opts.dense_radius + grid.half_length) / grid.spacing()));
    back.dense_hi = std::min(grid.n_points - 1,
                             (int)std::floor((opts.dense_radius + grid.half_length) / grid.spacing()));
  }
  for (long step = 1; step <= n_back; ++step) {
    detail::taylor_step(gen, -grid.dt, opts.taylor_degree, u, v, scratch);
    const double t = -double(step) * grid.dt;
    if (step % opts.record_stride == 0) {
      back.times.push_back(t);
      back.states.push_back(ModeState{u, v, t});
    }
    if (back.dense_hi >= back.dense_lo) {
      back.dense_times.push_back(t);
      back.dense_u.emplace_back(u.begin() + back.dense_lo, u.begin() + back.dense_hi + 1);
      back.dense_v.emplace_back(v.begin() + back.dense_lo, v.begin() + back.dense_hi + 1);
    }
  }

  // Forward leg from the original data.
  ModeState leg0 = data;
  Trajectory traj = evolve_mode(params, profile, mode, grid, leg0, t_end, opts);

  // Splice: backward samples (reversed) precede the forward ones.
  traj.times.insert(traj.times.begin(), back.times.rbegin(), back.times.rend());
  traj.states.insert(traj.states.begin(), std::make_move_iterator(back.states.rbegin()),
                     std::make_move_iterator(back.states.rend()));
  traj.dense_times.insert(traj.dense_times.begin(), back.dense_times.rbegin(),
                          back.dense_times.rend());
  traj.dense_u.insert(traj.dense_u.begin(), std::make_move_iterator(back.dense_u.rbegin()),
                      std::make_move_iterator(back.dense_u.rend()));
  traj.dense_v.insert(traj.dense_v.begin(), std::make_move_iterator(back.dense_v.rbegin()),
                      std::make_move_iterator(back.dense_v.rend()));
  return traj;
}

// ---------------------------------------------------------------------------
// Grid sizing helpers shared by scenarios and studies. dt = 1/m with m a
// multiple of 8, so integer times land exactly on samples and a stride that
// divides m keeps them on the coarse record too.
// ---------------------------------------------------------------------------

inline int snapped_time_divisor(double h, double cfl, double min_rate = 0.0) {
  const double need = std::max(1.0 / (cfl * h), min_rate);
  int m = (int)std::ceil(need);
  m = 8 * ((m + 7) / 8);
  return m;
}

}  // namespace wavetrap
