// Driver plumbing for the scenario harness: automatic grid sizing, check
// selection, constant fitting, sweeps, convergence studies, and the CSV/JSON
// artifact round trip. The physics behind the individual checks lives in the
// dedicated suites; here we pin the bookkeeping that turns a config into runs
// and artifacts:
//
//   * auto grids: half length = reach + data support + 10 (the wave cone can
//     never touch the walls), odd point counts (x = 0 stays on the lattice),
//     dt = 1/m with m a multiple of 8 meeting both the CFL bound and, when a
//     time transform is requested, its sampling-rate gate;
//   * the record lattice: record_interval must be a whole multiple of dt and
//     must divide both evolution legs;
//   * check selection: the applicable set tracks epsilon, the data phase,
//     the horizon and the spectral switch; explicit lists are validated
//     against the registry;
//   * artifacts: %.17g cells make reruns byte-identical, and summary.json
//     round-trips through the reader without losing a bit.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <wavetrap/scenario.hpp>
#include <wavetrap/sweep.hpp>

using namespace wavetrap;
namespace fs = std::filesystem;

namespace {

template <class F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// eps = 0 conservation run on a small box, cheap enough to run twice.
ScenarioConfig tiny_run() {
  ScenarioConfig c;
  c.id = "tiny";
  c.model.epsilon = 0.0;
  c.model.t_horizon = 2.5;
  c.grid.h_target = 0.1;
  c.run.t_start = 0.0;
  c.spectral.enabled = false;
  c.checks = {"energy_drift", "energy_balance", "classical_bulk"};
  return c;
}

// eps > 0 windowed run exercising every applicable check in one pass.
ScenarioConfig windowed_run() {
  ScenarioConfig c;
  c.id = "harness_e2e";
  c.model.epsilon = 0.01;
  c.model.t_horizon = 4.0;
  c.grid.h_target = 0.05;
  c.data.width = 0.8;
  c.data.wavenumber = 1.0;
  c.data.phase = DataPhase::complex_mix;
  c.run.t_start = -2.0;
  // the Parseval check keeps bins with |tau| <= tau_max, so the cut must sit
  // far enough out that the discarded tail is below the 1e-8 gate
  c.spectral.tau_max = 64.0;
  return c;
}

// explicit-grid base for the refinement study (h = 0.2, dt = 1/16).
ScenarioConfig converge_base() {
  ScenarioConfig c;
  c.id = "refine";
  c.model.epsilon = 0.05;
  c.model.t_horizon = 2.5;
  c.grid.auto_size = false;
  c.grid.half_length = 16.0;
  c.grid.n_points = 161;
  c.grid.time_divisor = 16;
  c.ells = {1};
  c.data.width = 0.8;
  c.data.wavenumber = 1.0;
  c.data.phase = DataPhase::complex_mix;
  c.run.t_start = -2.0;
  return c;
}

}  // namespace

TEST_CASE("auto grid sizing keeps the wave cone inside the box and the origin on the lattice") {
  ScenarioConfig cfg;
  cfg.grid.h_target = 0.05;
  cfg.grid.cfl = 0.5;
  cfg.data.kind = DataConfig::Kind::zero;  // support radius 0: exact arithmetic

  // reach = max(2, 6) = 6, margin 10: half length 16, 641 points, h = 0.05,
  // and 1/(cfl h) = 40 is already a multiple of 8.
  const ResolvedGrid r = resolve_grid(cfg, -2.0, 6.0, false);
  CHECK(r.grid.half_length == 16.0);
  CHECK(r.grid.n_points == 641);
  CHECK(r.grid.spacing() == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(r.grid.dt == 0.025);
  CHECK(r.record_stride == 10);

  // a transform up to tau_max = 64 needs 2 * 64 / pi ~ 40.7 samples per unit
  // time, so the divisor snaps up to the next multiple of 8.
  ScenarioConfig dft = cfg;
  dft.spectral.tau_max = 64.0;
  const ResolvedGrid rd = resolve_grid(dft, -2.0, 6.0, true);
  CHECK(rd.grid.dt == 1.0 / 48.0);
  CHECK(rd.record_stride == 12);
  CHECK(rd.grid.n_points == r.grid.n_points);

  // tau_max = 50 needs only ~31.8 samples: the CFL bound still dominates
  dft.spectral.tau_max = 50.0;
  CHECK(resolve_grid(dft, -2.0, 6.0, true).grid.dt == 0.025);

  // gaussian data push the walls out by their support radius (1e-16 cutoff)
  ScenarioConfig g;  // defaults: unit-width gaussian, h_target 0.036
  const ResolvedGrid rg = resolve_grid(g, -2.0, 6.0, false);
  const double support = std::sqrt(16.0 * std::log(10.0));
  CHECK(rg.grid.half_length == doctest::Approx(16.0 + support).epsilon(1e-15));
  CHECK(rg.grid.n_points % 2 == 1);
  CHECK(rg.grid.spacing() <= g.grid.h_target * (1.0 + 1e-12));
  CHECK(rg.grid.spacing() >= 0.9 * g.grid.h_target);
  const int m = (int)std::lround(1.0 / rg.grid.dt);
  CHECK(m % 8 == 0);
  CHECK(rg.grid.dt <= g.grid.cfl * rg.grid.spacing() * (1.0 + 1e-12));
}

TEST_CASE("explicit grids pass through and the record lattice is validated") {
  ScenarioConfig cfg;
  cfg.grid.auto_size = false;
  cfg.grid.half_length = 16.0;
  cfg.grid.n_points = 321;
  cfg.grid.time_divisor = 32;

  const ResolvedGrid r = resolve_grid(cfg, -2.0, 4.0, false);
  CHECK(r.grid.half_length == 16.0);
  CHECK(r.grid.n_points == 321);
  CHECK(r.grid.dt == 1.0 / 32.0);
  CHECK(r.record_stride == 8);

  // sampling gate: 32 steps per unit time cannot resolve tau up to 64,
  // while 100/pi ~ 31.8 fits
  cfg.spectral.tau_max = 64.0;
  CHECK(contains(error_text([&] { resolve_grid(cfg, -2.0, 4.0, true); }),
                 "time_divisor too small"));
  cfg.spectral.tau_max = 50.0;
  CHECK_NOTHROW(resolve_grid(cfg, -2.0, 4.0, true));

  ScenarioConfig bad = cfg;
  bad.grid.n_points = 2;
  CHECK(contains(error_text([&] { resolve_grid(bad, -2.0, 4.0, false); }),
                 "explicit grid needs"));

  ScenarioConfig coarse;
  coarse.grid.h_target = -1.0;
  CHECK(contains(error_text([&] { resolve_grid(coarse, -2.0, 4.0, false); }),
                 "positive h_target"));

  // 0.3 is not a multiple of 1/32; 0 is not positive
  ScenarioConfig off = cfg;
  off.run.record_interval = 0.3;
  CHECK(contains(error_text([&] { resolve_grid(off, -2.0, 4.0, false); }),
                 "positive multiple of dt"));
  off.run.record_interval = 0.0;
  CHECK(contains(error_text([&] { resolve_grid(off, -2.0, 4.0, false); }),
                 "positive multiple of dt"));

  // the horizon must sit on the step lattice, and both legs must hold a
  // whole number of record intervals (4.125 * 32 = 132 steps, stride 8)
  CHECK(contains(error_text([&] { resolve_grid(cfg, -2.0, 4.0001, false); }),
                 "whole numbers of steps"));
  CHECK(contains(error_text([&] { resolve_grid(cfg, -2.0, 4.125, false); }),
                 "divide both evolution legs"));
}

TEST_CASE("check selection follows the scenario shape") {
  const std::vector<std::string>& known = known_checks();
  CHECK(known.size() == 20);

  // defaults: eps = 0.01, real gaussian, T = 50, t_start = -2, spectral on
  ScenarioConfig c;
  std::set<std::string> s = resolve_checks(c);
  CHECK(s.size() == 18);
  CHECK(s.count("energy_drift") == 0);
  CHECK(s.count("noether_indefinite") == 0);
  CHECK(s.count("domination") == 1);
  CHECK(s.count("i_functional") == 1);
  CHECK(s.count("parseval") == 1);
  CHECK(s.count("closing") == 1);
  for (const std::string& name : s)
    CHECK(std::find(known.begin(), known.end(), name) != known.end());

  c.model.epsilon = 0.0;  // conservation becomes certifiable
  s = resolve_checks(c);
  CHECK(s.size() == 19);
  CHECK(s.count("energy_drift") == 1);

  c.data.phase = DataPhase::imaginary;  // the indefinite-charge probe applies
  s = resolve_checks(c);
  CHECK(s.size() == 20);
  CHECK(s.count("noether_indefinite") == 1);

  c.data.kind = DataConfig::Kind::zero;  // ... but only to gaussian data
  CHECK(resolve_checks(c).count("noether_indefinite") == 0);

  ScenarioConfig plain;
  plain.spectral.enabled = false;  // windowed but transform-free
  s = resolve_checks(plain);
  CHECK(s.size() == 15);
  CHECK(s.count("parseval") == 0);
  CHECK(s.count("refined_spectral") == 0);
  CHECK(s.count("identity_tau") == 1);

  plain.run.t_start = 0.0;  // no padded legs: the windowed block drops out
  s = resolve_checks(plain);
  CHECK(s.size() == 11);
  CHECK(s.count("identity_tau") == 0);
  CHECK(s.count("source_norms") == 0);
  CHECK(s.count("domination") == 1);

  plain.model.t_horizon = 1.5;  // selection logic only; the driver rejects T <= 2
  s = resolve_checks(plain);
  CHECK(s.size() == 10);
  CHECK(s.count("domination") == 0);
}

TEST_CASE("explicit check lists are validated against the registry") {
  ScenarioConfig c;
  c.checks = {"positivity", "energy_balance"};
  CHECK(resolve_checks(c) == std::set<std::string>{"energy_balance", "positivity"});

  c.checks.push_back("frobnicate");
  CHECK_THROWS_AS((void)resolve_checks(c), ScenarioError);
  CHECK(contains(error_text([&] { (void)resolve_checks(c); }),
                 "unknown check 'frobnicate'"));
}

TEST_CASE("constant fitting reports the running max and the worst consecutive jump") {
  const ConstantFit flat = fit_constant({5.0, 5.0, 5.0});
  CHECK(flat.c_hat == 5.0);
  CHECK(flat.stability == 1.0);

  const ConstantFit step = fit_constant({4.0, 5.0});
  CHECK(step.c_hat == 5.0);
  CHECK(step.stability == doctest::Approx(1.25));

  const ConstantFit swing = fit_constant({3.0, 6.0, 2.0});
  CHECK(swing.c_hat == 6.0);
  CHECK(swing.stability == doctest::Approx(3.0));

  const ConstantFit sign = fit_constant({-2.0, 1.0});
  CHECK(sign.c_hat == 1.0);                        // the max is over signed values
  CHECK(sign.stability == doctest::Approx(2.0));   // jumps compare magnitudes

  const ConstantFit zeros = fit_constant({0.0, 0.0, 0.0});
  CHECK(zeros.c_hat == 0.0);
  CHECK(zeros.stability == 1.0);  // a flat zero series is stable

  CHECK(std::isinf(fit_constant({0.0, 1.0}).stability));  // zero -> finite is not
  CHECK_THROWS_AS((void)fit_constant({}), SweepError);
}

TEST_CASE("sweep axes parse, name and patch") {
  CHECK(parse_axis("t_horizon") == SweepAxis::t_horizon);
  CHECK(parse_axis("T") == SweepAxis::t_horizon);
  CHECK(parse_axis("epsilon") == SweepAxis::epsilon);
  CHECK(parse_axis("eps") == SweepAxis::epsilon);
  CHECK(parse_axis("resolution") == SweepAxis::resolution);
  CHECK(parse_axis("h") == SweepAxis::resolution);
  CHECK(parse_axis("ell") == SweepAxis::ell);
  CHECK(contains(error_text([] { (void)parse_axis("frequency"); }),
                 "unknown sweep axis 'frequency'"));
  for (SweepAxis a :
       {SweepAxis::t_horizon, SweepAxis::epsilon, SweepAxis::resolution, SweepAxis::ell})
    CHECK(parse_axis(axis_name(a)) == a);

  ScenarioConfig base;
  CHECK(patch_config(base, SweepAxis::t_horizon, 25.0).model.t_horizon == 25.0);
  CHECK(patch_config(base, SweepAxis::epsilon, 0.07).model.epsilon == 0.07);
  CHECK(patch_config(base, SweepAxis::resolution, 0.04).grid.h_target == 0.04);
  CHECK(patch_config(base, SweepAxis::ell, 2.0).ells == std::vector<int>{2});
  CHECK(contains(error_text([&] { (void)patch_config(base, SweepAxis::ell, 2.5); }),
                 "whole number"));
  CHECK(contains(error_text([&] { (void)patch_config(base, SweepAxis::ell, -1.0); }),
                 "whole number"));

  ScenarioConfig fixed = base;
  fixed.grid.auto_size = false;
  CHECK(contains(error_text([&] { (void)patch_config(fixed, SweepAxis::resolution, 0.04); }),
                 "auto-sized grid"));
}

TEST_CASE("a windowed scenario passes every applicable check and emits self-describing artifacts") {
  const ScenarioConfig cfg = windowed_run();
  const std::string dir = "harness_e2e_out";
  const SummaryReport rep = run_scenario(cfg, true, dir);

  CHECK(rep.scenario_id == "harness_e2e");
  CHECK(rep.checks.size() == 18);
  for (const CheckResult& c : rep.checks) {
    CAPTURE(c.name);
    CAPTURE(c.margin);
    CHECK(c.pass);
  }
  CHECK(rep.all_pass());

  // the emitted names are exactly the applicable set
  std::set<std::string> names;
  for (const CheckResult& c : rep.checks) names.insert(c.name);
  CHECK(names == resolve_checks(cfg));

  const CheckResult* pv = rep.find("parseval");
  REQUIRE(pv != nullptr);
  CHECK(pv->values.at("relative") <= 1e-8);
  CHECK(rep.find("no_such_check") == nullptr);

  // the empirical constants cover the whole estimate chain
  for (const char* key : {"e_initial", "e_horizon", "max_energy_ratio", "c_classical",
                          "c_refined", "c_i", "c_j", "c_closing", "f_ratio", "g_ratio",
                          "domination_constant"})
    CHECK(rep.constants.count(key) == 1);
  CHECK(rep.constants.at("e_initial") > 0.0);
  CHECK(rep.constants.at("max_energy_ratio") >= 1.0);
  CHECK(rep.flags.at("modes") == "0");
  CHECK(rep.flags.at("taylor_degree") == "8");

  // artifacts: the record grid holds 33 times (t = -2 .. 6 every 1/4)
  REQUIRE(fs::exists(dir + "/energies.csv"));
  REQUIRE(fs::exists(dir + "/morawetz.csv"));
  REQUIRE(fs::exists(dir + "/spectral.csv"));
  REQUIRE(fs::exists(dir + "/summary.json"));
  const std::string energies = slurp(dir + "/energies.csv");
  CHECK(energies.substr(0, energies.find('\n')) == "t,e_total,e_ratio,e_bound,e_ell0");
  CHECK(std::count(energies.begin(), energies.end(), '\n') == 34);

  // summary.json round-trips without losing a bit
  const SummaryReport back = load_summary_json(dir + "/summary.json");
  CHECK(back.scenario_id == rep.scenario_id);
  CHECK(back.all_pass());
  CHECK(back.constants == rep.constants);
  CHECK(back.flags == rep.flags);
  REQUIRE(back.checks.size() == rep.checks.size());
  for (std::size_t i = 0; i < rep.checks.size(); ++i) {
    CHECK(back.checks[i].name == rep.checks[i].name);
    CHECK(back.checks[i].pass == rep.checks[i].pass);
    CHECK(back.checks[i].margin == rep.checks[i].margin);
    CHECK(back.checks[i].values == rep.checks[i].values);
  }
  CHECK(back.runtimes_s.count("total") == 1);

  fs::remove_all(dir);
}

TEST_CASE("identical configs write byte-identical CSV artifacts") {
  const ScenarioConfig cfg = tiny_run();
  const SummaryReport a = run_scenario(cfg, true, "harness_det_a");
  const SummaryReport b = run_scenario(cfg, true, "harness_det_b");
  CHECK(a.all_pass());
  CHECK(b.all_pass());
  CHECK(slurp("harness_det_a/energies.csv") == slurp("harness_det_b/energies.csv"));
  CHECK(slurp("harness_det_a/morawetz.csv") == slurp("harness_det_b/morawetz.csv"));

  // summary.json differs only in wall-clock runtimes: the payloads agree
  const SummaryReport la = load_summary_json("harness_det_a/summary.json");
  const SummaryReport lb = load_summary_json("harness_det_b/summary.json");
  CHECK(la.constants == lb.constants);
  CHECK(la.flags == lb.flags);

  fs::remove_all("harness_det_a");
  fs::remove_all("harness_det_b");
}

TEST_CASE("a mode sweep tags each point and fits every shared constant") {
  const SweepResult r = run_sweep(tiny_run(), SweepAxis::ell, {0.0, 1.0});
  CHECK(r.axis == SweepAxis::ell);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].report.scenario_id == "tiny_ell=0");
  CHECK(r.points[1].report.scenario_id == "tiny_ell=1");
  CHECK(r.all_pass);
  CHECK(r.points[0].report.flags.at("modes") == "0");
  CHECK(r.points[1].report.flags.at("modes") == "1");

  REQUIRE(r.fits.count("e_initial") == 1);
  const double e0 = r.points[0].report.constants.at("e_initial");
  const double e1 = r.points[1].report.constants.at("e_initial");
  CHECK(r.fits.at("e_initial").c_hat == std::max(e0, e1));
  CHECK(e1 > e0);  // the centrifugal term only adds energy
  CHECK(r.fits.at("grid_n").stability == 1.0);  // the box does not move with ell

  CHECK_THROWS_AS((void)run_sweep(tiny_run(), SweepAxis::ell, {}), SweepError);
}

TEST_CASE("a two-level refinement halves h and dt and reports residual orders") {
  const ConvergeResult r = run_converge(converge_base(), 2);
  REQUIRE(r.levels.size() == 2);
  CHECK(r.levels[0].h == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.levels[0].dt == 1.0 / 16.0);
  CHECK(r.levels[1].h == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.levels[1].dt == 1.0 / 32.0);

  REQUIRE(r.balance_orders.size() == 1);
  REQUIRE(r.identity_time_orders.size() == 1);
  REQUIRE(r.identity_tau_orders.size() == 1);
  REQUIRE(r.approx_orders.size() == 1);

  // with two levels the headline slope is the single per-halving order
  CHECK(r.balance_slope == r.balance_orders[0]);
  CHECK(r.identity_time_slope == r.identity_time_orders[0]);
  CHECK(r.approx_slope == r.approx_orders[0]);
  for (int p = 0; p < 3; ++p) CHECK(r.identity_tau_slopes[p] == r.identity_tau_orders[0][p]);
  CHECK(r.min_balance_order == r.balance_slope);
  CHECK(r.min_identity_order <= r.identity_time_slope);

  // the residuals shrink under refinement, at better than second order for
  // the smooth diagnostics (the production study pins the order near 4)
  CHECK(r.levels[1].balance_residual < r.levels[0].balance_residual);
  CHECK(r.levels[1].identity_time_l1 < r.levels[0].identity_time_l1);
  CHECK(r.levels[1].approx_l1 < r.levels[0].approx_l1);
  CHECK(r.balance_orders[0] > 2.0);
  CHECK(r.identity_time_orders[0] > 2.0);
}

TEST_CASE("malformed driver requests are rejected before any evolution") {
  // refinement preconditions
  CHECK(contains(error_text([] { (void)run_converge(windowed_run(), 2); }),
                 "explicit grid"));
  {
    ScenarioConfig two = converge_base();
    two.ells = {0, 1};
    CHECK(contains(error_text([&] { (void)run_converge(two, 2); }), "single mode"));
  }
  CHECK(contains(error_text([] { (void)run_converge(converge_base(), 1); }),
                 "at least 2 levels"));
  {
    ScenarioConfig late = converge_base();
    late.run.t_start = 0.0;
    CHECK(contains(error_text([&] { (void)run_converge(late, 2); }), "t_start <= -2"));
  }
  {
    ScenarioConfig hollow = converge_base();
    hollow.data.kind = DataConfig::Kind::zero;
    CHECK(contains(error_text([&] { (void)run_converge(hollow, 2); }), "nonzero data"));
  }

  // scenario preconditions: each trips before any state is built
  {
    ScenarioConfig c = tiny_run();
    c.ells = {};
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }), "at least one mode"));
  }
  {
    ScenarioConfig c = windowed_run();
    c.spectral.enabled = false;
    c.checks = {"parseval"};
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }),
                   "spectral.enabled = true"));
  }
  {
    ScenarioConfig c = windowed_run();
    c.run.t_start = 0.0;
    c.checks = {"identity_tau"};
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }),
                   "windowed checks need"));
  }
  {
    ScenarioConfig c = windowed_run();
    c.checks = {"energy_drift"};  // eps = 0.01 in this scenario
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }),
                   "needs epsilon = 0"));
  }
  {
    ScenarioConfig c = windowed_run();
    c.checks = {"noether_indefinite"};  // the data phase here is complex_mix
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }),
                   "imaginary gaussian data"));
  }
  {
    ScenarioConfig c = tiny_run();
    c.run.t_start = 0.5;
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }),
                   "t_start must be <= 0"));
  }
  {
    ScenarioConfig c = tiny_run();
    c.checks = {"frobnicate"};
    CHECK(contains(error_text([&] { (void)run_scenario(c, false); }), "unknown check"));
  }
}

TEST_CASE("CSV cells are printed with round-trip precision and row widths are enforced") {
  CHECK(format_g17(1.5) == "1.5");
  CHECK(format_g17(0.0625) == "0.0625");
  CHECK(format_g17(1.0 / 3.0) == "0.33333333333333331");

  const std::string path = "harness_csv_tmp.csv";
  write_csv(path, {"x", "y"}, {{1.5, 1.0 / 3.0}, {0.25, 0.0625}});
  CHECK(slurp(path) == "x,y\n1.5,0.33333333333333331\n0.25,0.0625\n");
  fs::remove(path);

  CHECK_THROWS_AS(write_csv(path, {"x", "y"}, {{1.0}}), ReportError);
  fs::remove(path);  // the width check trips after the header is out
  CHECK_THROWS_AS(write_csv("no_such_dir_zzz/out.csv", {"x"}, {}), ReportError);
  CHECK_THROWS_AS((void)load_summary_json("no_such_file_zzz.json"), ReportError);
}
