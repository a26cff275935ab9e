#pragma once
// Scenario configuration: a small sectioned key = value text format with a
// mandatory schema tag. Parsing reports line numbers; emission is canonical
// (fixed section/key order, %.17g for reals) so parse(emit(c)) == c exactly.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavetrap/model.hpp"

namespace wavetrap {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kConfigSchema = "wavetrap-config/1";

struct GridConfig {
  bool auto_size = true;
  double h_target = 0.036;  // used when auto_size
  double cfl = 0.5;
  double half_length = 0.0;  // used when !auto_size
  int n_points = 0;
  int time_divisor = 0;  // dt = 1 / time_divisor
  bool operator==(const GridConfig&) const = default;
};

struct DataConfig {
  enum class Kind { zero, gaussian };
  Kind kind = Kind::gaussian;
  DataPhase phase = DataPhase::real;
  double center = 0.0;
  double width = 1.0;
  double wavenumber = 0.0;
  bool traveling = false;
  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  double t_start = -2.0;
  double record_interval = 0.25;  // coarse full-state sampling period
  std::string output_dir = "out";
  bool operator==(const RunConfig&) const = default;
};

struct SpectralConfig {
  bool enabled = true;
  double tau_max = 64.0;
  double pad_time = 2.0;
  bool operator==(const SpectralConfig&) const = default;
};

struct ScenarioConfig {
  std::string schema = kConfigSchema;
  std::string id = "scenario";
  ModelParams model;
  PotentialProfile profile;
  GridConfig grid;
  std::vector<int> ells{0};
  DataConfig data;
  RunConfig run;
  SpectralConfig spectral;
  std::vector<std::string> checks;  // named checks to run; empty means "all"
  bool operator==(const ScenarioConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing helpers.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string cfg_trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}

inline std::vector<std::string> cfg_split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = cfg_trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct CfgReader {
  std::string section, key, value;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + what +
                      (key.empty() ? "" : " (key '" + section + "." + key + "')"));
  }
  double as_double() const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) fail("trailing characters after number '" + value + "'");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("expected a number, got '" + value + "'");
    }
  }
  int as_int() const {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(value, &pos);
      if (pos != value.size()) fail("trailing characters after integer '" + value + "'");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("expected an integer, got '" + value + "'");
    }
  }
  bool as_bool() const {
    if (value == "true") return true;
    if (value == "false") return false;
    fail("expected true/false, got '" + value + "'");
  }
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  cfg.checks.clear();
  cfg.ells.clear();
  bool saw_schema = false;

  detail::CfgReader r;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++r.line;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::cfg_trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        r.key.clear();
        r.fail("malformed section header '" + line + "'");
      }
      r.section = detail::cfg_trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"model",  "profile", "grid",    "modes",
                                                     "data",   "run",     "spectral", "checks"};
      if (std::find(known.begin(), known.end(), r.section) == known.end()) {
        r.key.clear();
        r.fail("unknown section '" + r.section + "'");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      r.key.clear();
      r.fail("expected 'key = value', got '" + line + "'");
    }
    r.key = detail::cfg_trim(line.substr(0, eq));
    r.value = detail::cfg_trim(line.substr(eq + 1));
    if (r.key.empty()) r.fail("empty key");

    if (r.section.empty()) {
      if (r.key == "schema") {
        if (r.value != kConfigSchema)
          r.fail("unsupported schema '" + r.value + "', expected '" + kConfigSchema + "'");
        saw_schema = true;
      } else if (r.key == "id") {
        cfg.id = r.value;
      } else {
        r.fail("unknown top-level key");
      }
    } else if (r.section == "model") {
      if (r.key == "epsilon") cfg.model.epsilon = r.as_double();
      else if (r.key == "big_n") cfg.model.big_n = r.as_double();
      else if (r.key == "delta") cfg.model.delta = r.as_double();
      else if (r.key == "alpha") cfg.model.alpha = r.as_double();
      else if (r.key == "m_const") cfg.model.m_const = r.as_double();
      else if (r.key == "t_horizon") cfg.model.t_horizon = r.as_double();
      else r.fail("unknown key");
    } else if (r.section == "profile") {
      if (r.key == "shape") {
        if (r.value == "bump") cfg.profile.shape = PotentialProfile::Shape::bump;
        else if (r.value == "scaled_bump") cfg.profile.shape = PotentialProfile::Shape::scaled_bump;
        else r.fail("unknown shape '" + r.value + "'");
      } else if (r.key == "center") cfg.profile.center = r.as_double();
      else if (r.key == "width") cfg.profile.width = r.as_double();
      else if (r.key == "amplitude") cfg.profile.amplitude = r.as_double();
      else r.fail("unknown key");
    } else if (r.section == "grid") {
      if (r.key == "auto") cfg.grid.auto_size = r.as_bool();
      else if (r.key == "h_target") cfg.grid.h_target = r.as_double();
      else if (r.key == "cfl") cfg.grid.cfl = r.as_double();
      else if (r.key == "half_length") cfg.grid.half_length = r.as_double();
      else if (r.key == "n_points") cfg.grid.n_points = r.as_int();
      else if (r.key == "time_divisor") cfg.grid.time_divisor = r.as_int();
      else r.fail("unknown key");
    } else if (r.section == "modes") {
      if (r.key == "ells") {
        for (const std::string& s : detail::cfg_split_list(r.value)) {
          try {
            cfg.ells.push_back(std::stoi(s));
          } catch (const std::exception&) {
            r.fail("bad mode number '" + s + "'");
          }
        }
      } else r.fail("unknown key");
    } else if (r.section == "data") {
      if (r.key == "kind") {
        if (r.value == "zero") cfg.data.kind = DataConfig::Kind::zero;
        else if (r.value == "gaussian") cfg.data.kind = DataConfig::Kind::gaussian;
        else r.fail("unknown data kind '" + r.value + "'");
      } else if (r.key == "phase") {
        if (r.value == "real") cfg.data.phase = DataPhase::real;
        else if (r.value == "imaginary") cfg.data.phase = DataPhase::imaginary;
        else if (r.value == "complex_mix") cfg.data.phase = DataPhase::complex_mix;
        else r.fail("unknown phase '" + r.value + "'");
      } else if (r.key == "center") cfg.data.center = r.as_double();
      else if (r.key == "width") cfg.data.width = r.as_double();
      else if (r.key == "wavenumber") cfg.data.wavenumber = r.as_double();
      else if (r.key == "traveling") cfg.data.traveling = r.as_bool();
      else r.fail("unknown key");
    } else if (r.section == "run") {
      if (r.key == "t_start") cfg.run.t_start = r.as_double();
      else if (r.key == "record_interval") cfg.run.record_interval = r.as_double();
      else if (r.key == "output_dir") cfg.run.output_dir = r.value;
      else r.fail("unknown key");
    } else if (r.section == "spectral") {
      if (r.key == "enabled") cfg.spectral.enabled = r.as_bool();
      else if (r.key == "tau_max") cfg.spectral.tau_max = r.as_double();
      else if (r.key == "pad_time") cfg.spectral.pad_time = r.as_double();
      else r.fail("unknown key");
    } else if (r.section == "checks") {
      if (r.key == "enable") cfg.checks = detail::cfg_split_list(r.value);
      else r.fail("unknown key");
    }
  }
  if (!saw_schema) throw ConfigError("config is missing the mandatory 'schema = " +
                                     std::string(kConfigSchema) + "' line");
  if (cfg.ells.empty()) cfg.ells = {0};
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::string emit_config(const ScenarioConfig& c) {
  using detail::fmt_double;
  std::ostringstream o;
  o << "schema = " << c.schema << "\n";
  o << "id = " << c.id << "\n\n";
  o << "[model]\n";
  o << "epsilon = " << fmt_double(c.model.epsilon) << "\n";
  o << "big_n = " << fmt_double(c.model.big_n) << "\n";
  o << "delta = " << fmt_double(c.model.delta) << "\n";
  o << "alpha = " << fmt_double(c.model.alpha) << "\n";
  o << "m_const = " << fmt_double(c.model.m_const) << "\n";
  o << "t_horizon = " << fmt_double(c.model.t_horizon) << "\n\n";
  o << "[profile]\n";
  o << "shape = "
    << (c.profile.shape == PotentialProfile::Shape::bump ? "bump" : "scaled_bump") << "\n";
  o << "center = " << fmt_double(c.profile.center) << "\n";
  o << "width = " << fmt_double(c.profile.width) << "\n";
  o << "amplitude = " << fmt_double(c.profile.amplitude) << "\n\n";
  o << "[grid]\n";
  o << "auto = " << (c.grid.auto_size ? "true" : "false") << "\n";
  o << "h_target = " << fmt_double(c.grid.h_target) << "\n";
  o << "cfl = " << fmt_double(c.grid.cfl) << "\n";
  o << "half_length = " << fmt_double(c.grid.half_length) << "\n";
  o << "n_points = " << c.grid.n_points << "\n";
  o << "time_divisor = " << c.grid.time_divisor << "\n\n";
  o << "[modes]\n";
  o << "ells = ";
  for (std::size_t i = 0; i < c.ells.size(); ++i) o << (i ? ", " : "") << c.ells[i];
  o << "\n\n";
  o << "[data]\n";
  o << "kind = " << (c.data.kind == DataConfig::Kind::zero ? "zero" : "gaussian") << "\n";
  o << "phase = "
    << (c.data.phase == DataPhase::real
            ? "real"
            : (c.data.phase == DataPhase::imaginary ? "imaginary" : "complex_mix"))
    << "\n";
  o << "center = " << fmt_double(c.data.center) << "\n";
  o << "width = " << fmt_double(c.data.width) << "\n";
  o << "wavenumber = " << fmt_double(c.data.wavenumber) << "\n";
  o << "traveling = " << (c.data.traveling ? "true" : "false") << "\n\n";
  o << "[run]\n";
  o << "t_start = " << fmt_double(c.run.t_start) << "\n";
  o << "record_interval = " << fmt_double(c.run.record_interval) << "\n";
  o << "output_dir = " << c.run.output_dir << "\n\n";
  o << "[spectral]\n";
  o << "enabled = " << (c.spectral.enabled ? "true" : "false") << "\n";
  o << "tau_max = " << fmt_double(c.spectral.tau_max) << "\n";
  o << "pad_time = " << fmt_double(c.spectral.pad_time) << "\n\n";
  o << "[checks]\n";
  o << "enable = ";
  for (std::size_t i = 0; i < c.checks.size(); ++i) o << (i ? ", " : "") << c.checks[i];
  o << "\n";
  return o.str();
}

}  // namespace wavetrap
