#pragma once
// Model definition: the 1+1d reduction of a wave equation on R x S^2 with a
// trapping potential V(x) = 1/(1+x^2) and a small complex perturbation
// i*eps*W(x), W smooth, real, compactly supported, |W| <= 1, W(0) != 0.
//
// Expanding in spherical harmonics, the mode with angular number ell obeys
//
//   -u_tt + u_xx - (ell(ell+1) + N) V(x) u + i eps W(x) u = 0,
//
// and the per-mode energy density is
//   1/2 ( |u_t|^2 + |u_x|^2 + (ell(ell+1) + N) V |u|^2 ).
//
// Everything here is an immutable value; validation throws rather than
// clamping so that misconfigured scenarios fail loudly.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavetrap/numerics.hpp"

namespace wavetrap {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data support sticking out of [-L+10, L-10], or a horizon the grid cannot
// causally contain.
struct SupportError : ModelError {
  using ModelError::ModelError;
};

// ---------------------------------------------------------------------------

struct ModelParams {
  double epsilon = 0.01;   // strength of the complex perturbation
  double big_n = 20.0;     // zeroth-order potential weight N
  double delta = 0.05;     // classical multiplier tilt
  double alpha = 0.4;      // frequency scaling exponent of the refined multiplier
  double m_const = 700.0;  // curvature-compensation constant in the refined weight
  double t_horizon = 50.0; // T: the window the estimates integrate over

  bool operator==(const ModelParams&) const = default;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw ModelError("epsilon must lie in [0, 1], got " + std::to_string(epsilon));
    if (!(big_n >= 1.0))
      throw ModelError("big_n must be >= 1 so the energy controls |u|^2 on the support of W");
    if (!(delta >= 0.0) || delta * (M_PI * M_PI / 4.0) >= 1.0)
      throw ModelError("delta must satisfy 0 <= delta < 4/pi^2 to keep the bulk weights positive");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ModelError("alpha must lie in (0, 1)");
    if (!(m_const >= 0.0)) throw ModelError("m_const must be nonnegative");
    if (!(t_horizon > 2.0))
      throw ModelError("t_horizon must exceed 2 so the two time-cutoff ramps stay disjoint");
  }
};

// V(x) = 1/(1+x^2): decays like x^-2, traps rays near x = 0.
inline double potential_v(double x) { return 1.0 / (1.0 + x * x); }
inline double potential_v_d1(double x) {
  const double u = 1.0 / (1.0 + x * x);
  return -2.0 * x * u * u;
}

// ---------------------------------------------------------------------------
// W: smooth compactly supported profile. `bump` is the standard mollifier
// normalized to W(center) = amplitude; `scaled_bump` is the flatter-topped
// exp(-r^2/(1-r^2)) variant. Both vanish with all derivatives at the support
// boundary |x - center| = width.
// ---------------------------------------------------------------------------

struct PotentialProfile {
  enum class Shape { bump, scaled_bump };
  Shape shape = Shape::bump;
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;

  bool operator==(const PotentialProfile&) const = default;

  void validate() const {
    if (!(width > 0.0)) throw ModelError("potential width must be positive");
    if (!(std::abs(amplitude) <= 1.0 && amplitude != 0.0))
      throw ModelError("potential amplitude must be nonzero with |amplitude| <= 1");
    if (!(std::abs(center) < width))
      throw ModelError("x = 0 must lie inside the support of W (|center| < width)");
  }

  double operator()(double x) const {
    const double r = (x - center) / width;
    const double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    if (shape == Shape::bump) return amplitude * std::exp(1.0 - 1.0 / (1.0 - r2));
    return amplitude * std::exp(-r2 / (1.0 - r2));
  }

  double support_radius() const { return std::abs(center) + width; }
};

inline double potential_w(const PotentialProfile& p, double x) { return p(x); }

// ---------------------------------------------------------------------------

struct Mode {
  int ell = 0;

  void validate() const {
    if (ell < 0) throw ModelError("mode number ell must be nonnegative");
  }
  // eigenvalue of -Laplace_{S^2} on the ell-th harmonic
  double angular_eigenvalue() const { return double(ell) * (ell + 1); }
  int multiplicity() const { return 2 * ell + 1; }
};

// Coefficient of -u in the per-mode equation: (ell(ell+1) + N) V(x).
inline double mode_equation_coefficient(const Mode& m, const ModelParams& p, double x) {
  return (m.angular_eigenvalue() + p.big_n) * potential_v(x);
}

// ---------------------------------------------------------------------------
// Spatial grid: uniform on [-L, L], homogeneous Dirichlet ends. dt <= spacing
// (unit wave speed) and the margin rule L >= T + R_data + 10 guarantee the
// Dirichlet walls stay causally invisible for the whole run.
// ---------------------------------------------------------------------------

struct GridSpec {
  double half_length = 72.0;
  int n_points = 4001;
  double dt = 0.0178571428571428571;  // 1/56

  void validate() const {
    if (!(half_length > 0.0)) throw ModelError("grid half_length must be positive");
    if (n_points < 16) throw ModelError("grid needs at least 16 points");
    if (!(dt > 0.0)) throw ModelError("dt must be positive");
    if (dt > spacing() + 1e-15)
      throw ModelError("dt exceeds the unit-speed limit dt <= spacing (cfl factor must be <= 1)");
  }

  double spacing() const { return 2.0 * half_length / (n_points - 1); }
  double x(int i) const { return -half_length + spacing() * i; }
  double cfl() const { return dt / spacing(); }

  // Throws unless the grid causally contains the run: data supported within
  // radius r_data, evolved over [t_lo, t_hi], never touches the last 5 points.
  void check_causality(double r_data, double t_lo, double t_hi) const {
    const double reach = r_data + std::max(std::abs(t_lo), std::abs(t_hi));
    if (reach > half_length - 5.0 * spacing())
      throw SupportError("grid too small: data of radius " + std::to_string(r_data) +
                         " evolved to |t| = " + std::to_string(std::max(std::abs(t_lo), std::abs(t_hi))) +
                         " can reach the boundary of [-" + std::to_string(half_length) + ", " +
                         std::to_string(half_length) + "]");
  }
};

// Margin rule used by scenario builders when they size grids automatically.
inline double required_half_length(double t_horizon, double data_support_radius) {
  return t_horizon + data_support_radius + 10.0;
}

// ---------------------------------------------------------------------------

struct ModeState {
  std::vector<cplx> u;  // field
  std::vector<cplx> v;  // time derivative
  double time = 0.0;

  void validate(const GridSpec& g) const {
    if ((int)u.size() != g.n_points || (int)v.size() != g.n_points)
      throw ModelError("state arrays do not match the grid");
  }
};

// ---------------------------------------------------------------------------
// Gaussian wave packets. The envelope exp(-((x-c)/w)^2) is treated as
// supported where it exceeds 1e-16 relative amplitude, i.e. within radius
// w * sqrt(16 ln 10) of the center.
// ---------------------------------------------------------------------------

enum class DataPhase { real, imaginary, complex_mix };

struct GaussianSpec {
  double center = 0.0;
  double width = 1.0;
  double wavenumber = 0.0;
  DataPhase phase = DataPhase::real;
  bool traveling = false;  // v = -d/dx u: an approximately rightward packet

  double support_radius() const {
    return std::abs(center) + width * std::sqrt(16.0 * std::log(10.0));
  }
};

inline ModeState initial_data_gaussian(const GridSpec& g, const GaussianSpec& spec) {
  if (!(spec.width > 0.0)) throw ModelError("gaussian width must be positive");
  if (spec.support_radius() > g.half_length - 10.0)
    throw SupportError("gaussian support (1e-16 cutoff) leaves [-L+10, L-10]; enlarge the grid");

  ModeState s;
  s.u.resize(g.n_points);
  s.v.resize(g.n_points);
  s.time = 0.0;
  for (int i = 0; i < g.n_points; ++i) {
    const double x = g.x(i);
    const double z = (x - spec.center) / spec.width;
    const double env = std::exp(-z * z);
    const cplx osc = std::polar(1.0, spec.wavenumber * x);
    cplx u;
    switch (spec.phase) {
      case DataPhase::real: u = env * osc.real(); break;
      case DataPhase::imaginary: u = cplx(0.0, env * osc.real()); break;
      case DataPhase::complex_mix: u = env * osc; break;
    }
    s.u[i] = u;
    if (spec.traveling) {
      // exact derivative of the same profile: d/dx [env * phase-part]
      const double denv = -2.0 * z / spec.width * env;
      cplx du;
      switch (spec.phase) {
        case DataPhase::real:
          du = denv * osc.real() - env * spec.wavenumber * osc.imag();
          break;
        case DataPhase::imaginary:
          du = cplx(0.0, denv * osc.real() - env * spec.wavenumber * osc.imag());
          break;
        case DataPhase::complex_mix:
          du = (denv + cplx(0.0, spec.wavenumber) * env) * osc;
          break;
      }
      s.v[i] = -du;
    } else {
      s.v[i] = 0.0;
    }
  }
  // Dirichlet walls
  s.u.front() = s.u.back() = 0.0;
  s.v.front() = s.v.back() = 0.0;
  return s;
}

}  // namespace wavetrap
