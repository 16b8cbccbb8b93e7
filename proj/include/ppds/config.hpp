#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppds/errors.hpp"
#include "ppds/problems.hpp"

namespace ppds {

struct DesignSpec {
  enum class Kind { SP, ASP, PDP, OVDP };
  Kind kind = Kind::OVDP;
  double gamma1 = 0.1;  // SP
  double tau = 0.1;     // PDP
  double theta = 0.01;  // PDP
  double beta = 1.0;    // OVDP
};

/// One benchmark run: a task, its problem parameters, the preconditioner
/// designs to compare, and the solve/oracle/budget knobs.
struct ExperimentConfig {
  std::string task;  // "mnr" | "unmix" | "gsr"
  MnrConfig mnr;
  UnmixConfig unmix;
  GsrConfig gsr;
  std::vector<DesignSpec> designs;
  long max_iters = 10000;
  double stop_tol = 1e-5;
  long oracle_iters = 20000;
  int record_every = 1;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  FistaOptions inner;  // budget for skewed proximity operators

  void validate() const {
    if (task != "mnr" && task != "unmix" && task != "gsr")
      throw ConfigError("unknown task '" + task + "' (expected mnr, unmix, or gsr)");
    if (designs.empty()) throw ConfigError("no designs listed");
    if (max_iters < 1 || oracle_iters < 1) throw ConfigError("iteration counts must be positive");
    if (!(stop_tol > 0.0)) throw ConfigError("stop_tol must be positive");
    if (record_every < 1) throw ConfigError("record_every must be positive");
    if (inner.max_iters < 1 || !(inner.tol > 0.0)) throw ConfigError("invalid inner budget");
  }
};

namespace detail {

inline double parse_num(const std::string& s, int line, const std::string& field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("field '" + field + "': not a number: '" + s + "'", line);
  }
}

inline long parse_int(const std::string& s, int line, const std::string& field) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("field '" + field + "': not an integer: '" + s + "'", line);
  }
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline DesignSpec parse_design_line(const std::string& line_text, int line) {
  std::istringstream ls(line_text);
  std::string name;
  ls >> name;
  DesignSpec d;
  std::map<std::string, double> kv;
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ConfigError("design parameter '" + tok + "' is not key=value", line);
    kv[tok.substr(0, eq)] = parse_num(tok.substr(eq + 1), line, tok.substr(0, eq));
  }
  auto take = [&kv, line](const char* key, double fallback, bool required) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw ConfigError(std::string("design needs parameter '") + key + "'", line);
      return fallback;
    }
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  if (name == "sp") {
    d.kind = DesignSpec::Kind::SP;
    d.gamma1 = take("gamma1", 0.0, true);
  } else if (name == "asp") {
    d.kind = DesignSpec::Kind::ASP;
  } else if (name == "pdp") {
    d.kind = DesignSpec::Kind::PDP;
    d.tau = take("tau", 0.0, true);
    d.theta = take("theta", 0.01, false);
  } else if (name == "ovdp") {
    d.kind = DesignSpec::Kind::OVDP;
    d.beta = take("beta", 0.0, true);
  } else {
    throw ConfigError("unknown design '" + name + "' (expected sp, asp, pdp, or ovdp)", line);
  }
  if (!kv.empty())
    throw ConfigError("design '" + name + "': unknown parameter '" + kv.begin()->first + "'", line);
  return d;
}

}  // namespace detail

/// Key-value text with [sections]: top-level run settings, a [problem]
/// section whose keys depend on the task, and one design per line inside
/// [designs]. '#' starts a comment. Malformed input raises ConfigError
/// with the offending line number.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string section;
  std::string line_text;
  int line = 0;
  std::map<std::string, std::pair<std::string, int>> problem_kv;
  bool saw_designs_section = false;
  while (std::getline(is, line_text)) {
    ++line;
    const auto hash = line_text.find('#');
    if (hash != std::string::npos) line_text = line_text.substr(0, hash);
    line_text = detail::trim(line_text);
    if (line_text.empty()) continue;
    if (line_text.front() == '[') {
      if (line_text.back() != ']') throw ConfigError("unterminated section header", line);
      section = line_text.substr(1, line_text.size() - 2);
      if (section != "problem" && section != "designs")
        throw ConfigError("unknown section '" + section + "'", line);
      if (section == "designs") saw_designs_section = true;
      continue;
    }
    if (section == "designs") {
      cfg.designs.push_back(detail::parse_design_line(line_text, line));
      continue;
    }
    const auto eq = line_text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = detail::trim(line_text.substr(0, eq));
    const std::string val = detail::trim(line_text.substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigError("empty key or value", line);
    if (section == "problem") {
      problem_kv[key] = {val, line};
      continue;
    }
    if (key == "task") cfg.task = val;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, line, key));
    else if (key == "max_iters") cfg.max_iters = detail::parse_int(val, line, key);
    else if (key == "stop_tol") cfg.stop_tol = detail::parse_num(val, line, key);
    else if (key == "oracle_iters") cfg.oracle_iters = detail::parse_int(val, line, key);
    else if (key == "record_every") cfg.record_every = static_cast<int>(detail::parse_int(val, line, key));
    else if (key == "inner_tol") cfg.inner.tol = detail::parse_num(val, line, key);
    else if (key == "inner_iters") cfg.inner.max_iters = static_cast<int>(detail::parse_int(val, line, key));
    else if (key == "out") cfg.out_dir = val;
    else throw ConfigError("unknown key '" + key + "'", line);
  }
  if (cfg.task.empty()) throw ConfigError("missing 'task'");
  if (cfg.task != "mnr" && cfg.task != "unmix" && cfg.task != "gsr")
    throw ConfigError("unknown task '" + cfg.task + "' (expected mnr, unmix, or gsr)");

  // Problem parameters; radii default to the derived formulas unless given.
  auto take = [&problem_kv](const char* key) {
    const auto it = problem_kv.find(key);
    if (it == problem_kv.end()) return std::pair<std::string, int>{"", 0};
    auto v = it->second;
    problem_kv.erase(it);
    return v;
  };
  auto num_or = [&take](const char* key, double fallback) {
    const auto [v, ln] = take(key);
    return v.empty() ? fallback : detail::parse_num(v, ln, key);
  };
  auto int_or = [&take](const char* key, long fallback) {
    const auto [v, ln] = take(key);
    return v.empty() ? fallback : detail::parse_int(v, ln, key);
  };
  if (cfg.task == "mnr") {
    const Index n1 = int_or("n1", 16), n2 = int_or("n2", 16), n3 = int_or("n3", 8);
    const double lambda = num_or("lambda", 0.005);
    const double sigma = num_or("sigma", 0.05);
    const double ps = num_or("p_s", 0.1);
    cfg.mnr = MnrConfig::with_derived_radii(n1, n2, n3, lambda, sigma, ps, cfg.seed);
    cfg.mnr.eta_s = num_or("eta_s", cfg.mnr.eta_s);
    cfg.mnr.eps = num_or("eps", cfg.mnr.eps);
  } else if (cfg.task == "unmix") {
    cfg.unmix = UnmixConfig::with_derived_radius(int_or("n1", 16), int_or("n2", 16),
                                                 int_or("bands", 32), int_or("endmembers", 4),
                                                 num_or("sigma", 0.05), cfg.seed);
    cfg.unmix.eps = num_or("eps", cfg.unmix.eps);
  } else {
    cfg.gsr = GsrConfig::with_derived_radius(int_or("n", 200), static_cast<int>(int_or("knn", 6)),
                                             num_or("rate", 0.2), num_or("sigma", 0.1), cfg.seed,
                                             cfg.seed + 1);
    cfg.gsr.pieces = static_cast<int>(int_or("pieces", 5));
    cfg.gsr.eps = num_or("eps", cfg.gsr.eps);
  }
  if (!problem_kv.empty())
    throw ConfigError("unknown [problem] key '" + problem_kv.begin()->first + "'",
                      problem_kv.begin()->second.second);
  if (!saw_designs_section) throw ConfigError("missing [designs] section");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(is);
}

}  // namespace ppds
