// Command-line front end: run a scenario, sweep an axis, run a grid
// convergence study, scan the weight-profile minimum, or pretty-print a
// stored summary. Exit code 0 means every requested check passed, 1 means
// some check failed, 2 means the run itself could not be completed.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavetrap/wavetrap.hpp"

namespace {

using namespace wavetrap;

void print_check(const CheckResult& c) {
  std::printf("[%s] %-22s margin=% .3e", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.margin);
  for (const auto& [k, v] : c.values) std::printf("  %s=%.6g", k.c_str(), v);
  std::printf("\n");
}

int print_report(const SummaryReport& rep) {
  for (const CheckResult& c : rep.checks) print_check(c);
  std::size_t n_fail = 0;
  for (const CheckResult& c : rep.checks)
    if (!c.pass) ++n_fail;
  std::printf("scenario %s: %zu checks, %zu failed\n", rep.scenario_id.c_str(),
              rep.checks.size(), n_fail);
  return rep.all_pass() ? 0 : 1;
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  const ScenarioConfig cfg = load_config(config_path);
  const SummaryReport rep = run_scenario(cfg, true, output_dir);
  const int rc = print_report(rep);
  const std::string dir = output_dir.empty() ? cfg.run.output_dir : output_dir;
  std::printf("artifacts: %s/{energies.csv, morawetz.csv%s, summary.json}\n", dir.c_str(),
              rep.constants.count("j_value") ? ", spectral.csv" : "");
  const auto it = rep.runtimes_s.find("total");
  if (it != rep.runtimes_s.end()) std::printf("wall time: %.2f s\n", it->second);
  return rc;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, bool write, const std::string& out_root) {
  const ScenarioConfig base = load_config(config_path);
  const SweepResult r = run_sweep(base, parse_axis(axis), values, write, out_root);
  for (const SweepPoint& p : r.points) {
    std::size_t n_fail = 0;
    for (const CheckResult& c : p.report.checks)
      if (!c.pass) ++n_fail;
    std::printf("[%s] %s=%-10g %zu checks, %zu failed\n", n_fail == 0 ? "PASS" : "FAIL",
                axis_name(r.axis), p.value, p.report.checks.size(), n_fail);
  }
  std::printf("%-24s %14s %12s\n", "constant", "c_hat", "stability");
  for (const auto& [name, fit] : r.fits)
    std::printf("%-24s %14.6g %12.4f\n", name.c_str(), fit.c_hat, fit.stability);
  return r.all_pass ? 0 : 1;
}

int cmd_converge(const std::string& config_path, int levels, double min_order) {
  const ScenarioConfig base = load_config(config_path);
  const ConvergeResult r = run_converge(base, levels);
  std::printf("%5s %10s %10s %12s %12s %12s %12s %12s %12s\n", "level", "h", "dt", "balance",
              "identity_t", "tau=1", "tau=4", "tau=32", "window_eq");
  for (std::size_t k = 0; k < r.levels.size(); ++k) {
    const ConvergeLevel& lv = r.levels[k];
    std::printf("%5zu %10.5f %10.5f %12.4e %12.4e %12.4e %12.4e %12.4e %12.4e\n", k, lv.h,
                lv.dt, lv.balance_residual, lv.identity_time_l1, lv.identity_tau_l1[0],
                lv.identity_tau_l1[1], lv.identity_tau_l1[2], lv.approx_l1);
  }
  for (std::size_t k = 0; k < r.balance_orders.size(); ++k) {
    std::printf("order %zu->%zu: balance=%.2f identity_t=%.2f tau={%.2f, %.2f, %.2f} "
                "window_eq=%.2f\n",
                k, k + 1, r.balance_orders[k], r.identity_time_orders[k],
                r.identity_tau_orders[k][0], r.identity_tau_orders[k][1],
                r.identity_tau_orders[k][2], r.approx_orders[k]);
  }
  std::printf("slope over %zu halvings: balance=%.2f identity_t=%.2f tau={%.2f, %.2f, %.2f} "
              "window_eq=%.2f\n",
              r.levels.size() - 1, r.balance_slope, r.identity_time_slope,
              r.identity_tau_slopes[0], r.identity_tau_slopes[1], r.identity_tau_slopes[2],
              r.approx_slope);
  const bool ok = r.min_balance_order >= min_order && r.min_identity_order >= min_order;
  std::printf("[%s] observed orders: balance=%.2f identity=%.2f (required >= %.2f)\n",
              ok ? "PASS" : "FAIL", r.min_balance_order, r.min_identity_order, min_order);
  return ok ? 0 : 1;
}

int cmd_lemma_scan(double m_const, double s_max, long n) {
  const LemmaScanResult r = lemma_min_scan(m_const, s_max, n);
  std::printf("profile (1 - 3 s^2)/(1 + s^2)^3 + %g s^2 on [0, %g], %ld samples\n", m_const,
              s_max, n);
  std::printf("min = %.12g at s = %.12g\n", r.min_value, r.argmin);
  return 0;
}

int cmd_report(const std::string& dir) {
  const SummaryReport rep = load_summary_json(dir + "/summary.json");
  const int rc = print_report(rep);
  std::printf("constants:\n");
  for (const auto& [k, v] : rep.constants) std::printf("  %-24s %.10g\n", k.c_str(), v);
  if (!rep.flags.empty()) {
    std::printf("flags:\n");
    for (const auto& [k, v] : rep.flags) std::printf("  %-24s %s\n", k.c_str(), v.c_str());
  }
  if (!rep.runtimes_s.empty()) {
    std::printf("runtimes (s):\n");
    for (const auto& [k, v] : rep.runtimes_s) std::printf("  %-24s %.3f\n", k.c_str(), v);
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wave-equation estimate laboratory"};
  app.require_subcommand(1);

  std::string config_path, output_dir, axis, report_dir;
  std::vector<double> values;
  bool write_points = false;
  int levels = 3;
  double min_order = 2.8;
  double m_const = 700.0, s_max = 10.0;
  long n_samples = 1000001;

  CLI::App* run = app.add_subcommand("run", "run one scenario and its checks");
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--output", output_dir, "override the output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "rerun a scenario along one axis");
  sweep->add_option("config", config_path, "base scenario config")->required();
  sweep->add_option("--axis", axis, "t_horizon | epsilon | resolution | ell")->required();
  sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
  sweep->add_flag("--write", write_points, "write per-point artifacts");
  sweep->add_option("--output", output_dir, "root directory for per-point artifacts");

  CLI::App* conv = app.add_subcommand("converge", "grid convergence of the residuals");
  conv->add_option("config", config_path, "base scenario config (explicit grid)")->required();
  conv->add_option("--levels", levels, "number of dyadic refinement levels");
  conv->add_option("--min-order", min_order, "required minimum observed order");

  CLI::App* lemma = app.add_subcommand("lemma-scan", "scan the combined weight profile");
  lemma->add_option("--m-const", m_const, "coefficient of the s^2 term");
  lemma->add_option("--smax", s_max, "scan upper end");
  lemma->add_option("--n", n_samples, "number of samples");

  CLI::App* report = app.add_subcommand("report", "pretty-print a stored summary.json");
  report->add_option("dir", report_dir, "output directory of a previous run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, axis, values, write_points, output_dir);
    if (conv->parsed()) return cmd_converge(config_path, levels, min_order);
    if (lemma->parsed()) return cmd_lemma_scan(m_const, s_max, n_samples);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
