#pragma once
// Result plumbing: named check verdicts, the per-scenario summary, and the
// CSV/JSON artifact writers. Every number that lands in summary.json hangs
// off a named check (with the formula it tested) or the constants table, so
// the artifacts are self-describing. CSV numbers are printed with %.17g and
// fixed row order, making identical configs produce bit-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wavetrap {

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One named check. `margin` is the signed headroom against the check's
// threshold: positive means pass with room to spare, negative means fail by
// that much. `formula` states the inequality or identity in plain text.
struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string formula;
  std::map<std::string, double> values;
};

struct SummaryReport {
  std::string scenario_id;
  std::vector<CheckResult> checks;
  std::map<std::string, double> constants;   // empirical constants of this run
  std::map<std::string, std::string> flags;  // resolved design choices
  std::map<std::string, double> runtimes_s;

  bool all_pass() const {
    for (const CheckResult& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const CheckResult* find(const std::string& name) const {
    for (const CheckResult& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ReportError("cannot create output directory '" + dir + "': " + ec.message());
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ReportError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const std::vector<double>& row : rows) {
    if (row.size() != header.size())
      throw ReportError("row width mismatch in '" + path + "'");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_g17(row[i]);
    out << "\n";
  }
  if (!out) throw ReportError("write failed for '" + path + "'");
}

inline nlohmann::json to_json(const SummaryReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario_id;
  j["all_pass"] = r.all_pass();
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : r.checks) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["margin"] = c.margin;
    jc["formula"] = c.formula;
    jc["values"] = c.values;
    checks.push_back(jc);
  }
  j["checks"] = checks;
  j["constants"] = r.constants;
  j["flags"] = r.flags;
  j["runtimes_s"] = r.runtimes_s;
  return j;
}

inline void write_summary_json(const std::string& path, const SummaryReport& r) {
  std::ofstream out(path);
  if (!out) throw ReportError("cannot open '" + path + "' for writing");
  out << to_json(r).dump(2) << "\n";
  if (!out) throw ReportError("write failed for '" + path + "'");
}

inline SummaryReport summary_from_json(const nlohmann::json& j) {
  SummaryReport r;
  r.scenario_id = j.value("scenario", "");
  if (j.contains("checks")) {
    for (const nlohmann::json& jc : j.at("checks")) {
      CheckResult c;
      c.name = jc.value("name", "");
      c.pass = jc.value("pass", false);
      c.margin = jc.value("margin", 0.0);
      c.formula = jc.value("formula", "");
      if (jc.contains("values"))
        c.values = jc.at("values").get<std::map<std::string, double>>();
      r.checks.push_back(std::move(c));
    }
  }
  if (j.contains("constants"))
    r.constants = j.at("constants").get<std::map<std::string, double>>();
  if (j.contains("flags")) r.flags = j.at("flags").get<std::map<std::string, std::string>>();
  if (j.contains("runtimes_s"))
    r.runtimes_s = j.at("runtimes_s").get<std::map<std::string, double>>();
  return r;
}

inline SummaryReport load_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return summary_from_json(j);
}

}  // namespace wavetrap
