#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ppds/config.hpp"
#include "ppds/problems.hpp"
#include "ppds/solver.hpp"

namespace ppds {

struct BuiltProblem {
  ProblemSpec spec;
  std::function<double(const std::vector<Eigen::VectorXd>&)> metric_hook;
  std::string metric_name;
};

/// Generates the synthetic instance for the configured task (seeded from
/// the experiment seed) and wires the task quality metric.
inline BuiltProblem build_problem(const ExperimentConfig& cfg) {
  if (cfg.task == "mnr") {
    MnrConfig c = cfg.mnr;
    c.seed = cfg.seed;
    const MnrData data = make_mnr_data(c);
    ProblemSpec spec = build_mnr(c, data.observed);
    auto hook = [u = data.u_true, cube = c.cube()](const std::vector<Eigen::VectorXd>& x) {
      return mpsnr(x[0], u, cube);
    };
    return BuiltProblem{std::move(spec), std::move(hook), "mpsnr"};
  }
  if (cfg.task == "unmix") {
    UnmixConfig c = cfg.unmix;
    c.seed = cfg.seed;
    const UnmixData data = make_unmix_data(c);
    ProblemSpec spec = build_unmix(c, data.endmembers, data.observed);
    auto hook = [a = data.abund_true](const std::vector<Eigen::VectorXd>& x) {
      return snr(x[0], a);
    };
    return BuiltProblem{std::move(spec), std::move(hook), "snr"};
  }
  if (cfg.task == "gsr") {
    GsrConfig c = cfg.gsr;
    c.graph_seed = cfg.seed;
    c.signal_seed = cfg.seed + 1;
    const GsrData data = make_gsr_data(c);
    ProblemSpec spec = build_gsr(c, data.graph, data.mask, data.observed);
    auto hook = [u = data.signal_true](const std::vector<Eigen::VectorXd>& x) {
      return psnr(x[0], u);
    };
    return BuiltProblem{std::move(spec), std::move(hook), "psnr"};
  }
  throw ConfigError("unknown task '" + cfg.task + "'");
}

inline PreconditionerPair instantiate_design(const DesignSpec& d, const OpGrid& grid) {
  switch (d.kind) {
    case DesignSpec::Kind::SP:
      return design_sp(grid, d.gamma1, block_norm_bound(grid));
    case DesignSpec::Kind::ASP:
      return design_asp(grid);
    case DesignSpec::Kind::PDP:
      return design_pdp(grid, d.tau, d.theta);
    case DesignSpec::Kind::OVDP:
      return design_ovdp(grid, d.beta);
  }
  throw ConfigError("unknown design kind");
}

inline std::string design_tag(const DesignSpec& d) {
  switch (d.kind) {
    case DesignSpec::Kind::SP:
      return "SP(g1=" + format_double_short(d.gamma1) + ")";
    case DesignSpec::Kind::ASP:
      return "ASP";
    case DesignSpec::Kind::PDP:
      return "PDP(tau=" + format_double_short(d.tau) + ",theta=" + format_double_short(d.theta) + ")";
    case DesignSpec::Kind::OVDP:
      return "OVDP(beta=" + format_double_short(d.beta) + ")";
  }
  return "?";
}

inline std::string sanitize_for_filename(const std::string& tag) {
  std::string out;
  for (char c : tag) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (c == '.') {
      out += 'p';
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

struct DesignOutcome {
  DesignSpec design;
  std::string tag;
  enum class Status { Ok, Skipped, Failed } status = Status::Ok;
  std::string note;
  long iters = 0;
  double seconds = 0.0;
  bool stopped_by_rule = false;
  std::optional<double> final_metric;
  std::optional<double> cond_value;
  std::optional<double> final_rmse;
  IterateState final_state;
  ConvergenceLog log;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<DesignOutcome> designs;
  std::optional<OracleResult> oracle;
  std::string summary_path;
  int exit_code = 0;
};

namespace detail {
// Quotes a CSV field when it carries commas or quotes (design tags do).
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}
}  // namespace detail

/// Runs one experiment: builds the instance, instantiates every design
/// (capacity and representability limits skip a design, other failures
/// mark it FAILED), computes the long-run reference point, solves per
/// design in parallel, and writes one CSV per design plus summary.csv.
/// Exit code 1 when any design FAILED, else 0.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       std::ostream* progress = nullptr) {
  cfg.validate();
  const BuiltProblem problem = build_problem(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  ExperimentResult result;
  result.designs.resize(cfg.designs.size());
  std::vector<std::optional<PreconditionerPair>> pairs(cfg.designs.size());
  for (std::size_t d = 0; d < cfg.designs.size(); ++d) {
    DesignOutcome& out = result.designs[d];
    out.design = cfg.designs[d];
    out.tag = design_tag(cfg.designs[d]);
    try {
      pairs[d] = instantiate_design(cfg.designs[d], problem.spec.grid);
    } catch (const CapacityError& e) {
      out.status = DesignOutcome::Status::Skipped;
      out.note = e.what();
    } catch (const StructuralError& e) {
      out.status = DesignOutcome::Status::Skipped;
      out.note = e.what();
    } catch (const std::exception& e) {
      out.status = DesignOutcome::Status::Failed;
      out.note = e.what();
    }
    if (progress && out.status != DesignOutcome::Status::Ok)
      *progress << out.tag
                << (out.status == DesignOutcome::Status::Skipped ? " skipped: " : " FAILED: ")
                << out.note << "\n";
  }

  std::vector<PreconditionerPair> candidates;
  for (const auto& p : pairs)
    if (p) candidates.push_back(*p);
  if (!candidates.empty()) {
    if (progress)
      *progress << "computing reference point over " << candidates.size() << " designs, "
                << cfg.oracle_iters << " iterations each\n";
    try {
      result.oracle = pseudo_oracle(problem.spec, candidates, cfg.oracle_iters, cfg.inner);
    } catch (const OracleFailureError& e) {
      if (progress) *progress << "warning: " << e.what() << "; rmse/residual columns stay empty\n";
    }
  }

  auto run_one = [&](std::size_t d) {
    DesignOutcome& out = result.designs[d];
    out.cond_value = verify_convergence_condition(problem.spec.grid, *pairs[d]);
    if (progress && *out.cond_value >= 1.0 - 1e-9)
      *progress << "warning: " << out.tag << " convergence condition value "
                << ConvergenceLog::format_field(*out.cond_value)
                << " is not strictly below 1; proceeding\n";
    SolveOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.stop_rule = StopRule::normalized_step(cfg.stop_tol);
    opts.record_every = cfg.record_every;
    opts.metric_hook = problem.metric_hook;
    opts.seed = cfg.seed;
    opts.inner = cfg.inner;
    if (result.oracle) opts.oracle = &result.oracle->x;
    try {
      SolveResult r = solve(problem.spec, *pairs[d], opts);
      out.iters = r.iters;
      out.stopped_by_rule = r.stopped_by_rule;
      out.final_state = std::move(r.state);
      out.log = std::move(r.log);
      if (!out.log.records.empty()) {
        out.seconds = out.log.records.back().elapsed_s;
        out.final_metric = out.log.records.back().metric;
        out.final_rmse = out.log.records.back().rmse;
      }
    } catch (const DivergenceError& e) {
      out.status = DesignOutcome::Status::Failed;
      out.note = e.what();
    }
  };

  std::vector<std::future<void>> futures;
  for (std::size_t d = 0; d < cfg.designs.size(); ++d)
    if (pairs[d]) futures.push_back(std::async(std::launch::async, run_one, d));
  for (auto& f : futures) f.get();

  for (std::size_t d = 0; d < cfg.designs.size(); ++d) {
    DesignOutcome& out = result.designs[d];
    if (out.status != DesignOutcome::Status::Ok) continue;
    out.csv_path = (std::filesystem::path(cfg.out_dir) /
                    (cfg.task + "_" + sanitize_for_filename(out.tag) + ".csv"))
                       .string();
    std::ofstream os(out.csv_path, std::ios::trunc);
    if (!os) throw StructuralError("run_experiment: cannot open " + out.csv_path);
    out.log.write_csv(os);
    if (progress)
      *progress << out.tag << ": " << (out.stopped_by_rule ? "stopped" : "hit max_iters") << " at t="
                << out.iters << ", cond=" << ConvergenceLog::format_field(*out.cond_value) << "\n";
  }

  result.summary_path = (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
  std::ofstream sum(result.summary_path, std::ios::trunc);
  if (!sum) throw StructuralError("run_experiment: cannot open " + result.summary_path);
  sum << "design,iters_to_stop,seconds_to_stop,final_metric,cond_value\n";
  for (const DesignOutcome& out : result.designs) {
    sum << detail::csv_field(out.tag) << ",";
    if (out.status == DesignOutcome::Status::Ok) {
      sum << out.iters << "," << ConvergenceLog::format_field(out.seconds) << ","
          << (out.final_metric ? ConvergenceLog::format_field(*out.final_metric) : "") << ","
          << (out.cond_value ? ConvergenceLog::format_field(*out.cond_value) : "") << "\n";
    } else {
      const char* label = out.status == DesignOutcome::Status::Skipped ? "SKIPPED(" : "FAILED(";
      sum << detail::csv_field(label + out.note + ")") << ",,,\n";
    }
    if (out.status == DesignOutcome::Status::Failed) result.exit_code = 1;
  }
  return result;
}

/// Convergence-condition check plus the operator invariant suite for the
/// configured problem. Prints one line per design and per invariant;
/// returns 0 when everything holds.
inline int verify_designs(const ExperimentConfig& cfg, std::ostream& os) {
  cfg.validate();
  const BuiltProblem problem = build_problem(cfg);
  const OpGrid& grid = problem.spec.grid;
  int failures = 0;

  for (Index j = 0; j < grid.num_dual(); ++j)
    for (Index i = 0; i < grid.num_primal(); ++i) {
      if (!grid.present(j, i)) continue;
      const LinOp& op = grid.at(j, i);
      const double adj = adjoint_consistency_check(op, 20, 7777ULL + 13 * j + i);
      const double est = power_iteration_norm(op, 200, 4242ULL);
      const bool ok = adj <= 1e-10 && est <= op.norm_bound() + 1e-6;
      if (!ok) ++failures;
      os << (ok ? "ok " : "FAIL ") << "entry(" << j << "," << i << "): adjoint=" << adj
         << " norm_est=" << est << " bound=" << op.norm_bound() << "\n";
    }

  for (const DesignSpec& d : cfg.designs) {
    const std::string tag = design_tag(d);
    try {
      const PreconditionerPair p = instantiate_design(d, grid);
      const double cond = verify_convergence_condition(grid, p);
      bool ok = true;
      if (d.kind == DesignSpec::Kind::OVDP && cond > 1.0 + 1e-6) ok = false;
      if (!ok) ++failures;
      os << (ok ? "ok " : "FAIL ") << tag << ": cond_value=" << ConvergenceLog::format_field(cond);
      if (cond >= 1.0 - 1e-9) os << " (warning: not strictly below 1)";
      os << "\n";
    } catch (const CapacityError& e) {
      os << "skip " << tag << ": " << e.what() << "\n";
    } catch (const StructuralError& e) {
      os << "skip " << tag << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
      ++failures;
      os << "FAIL " << tag << ": " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace ppds
