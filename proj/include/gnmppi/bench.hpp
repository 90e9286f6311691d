#ifndef GNMPPI_BENCH_HPP
#define GNMPPI_BENCH_HPP

// Experiment runner behind the gnmppi-bench tool: suite configuration,
// outcome classification, and report/trace writers.

#include "gnmppi/core.hpp"
#include "gnmppi/jacobian.hpp"
#include "gnmppi/problems.hpp"
#include "gnmppi/solvers.hpp"
#include "gnmppi/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gnmppi::bench {

using json = nlohmann::json;

/// Absolute tolerance for problems that do not register their own.
inline constexpr double kDefaultOptimumTol = 1e-3;

enum class Outcome { optimal, suboptimal, no_solution, not_admissible };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::optimal: return "optimal";
    case Outcome::suboptimal: return "suboptimal";
    case Outcome::no_solution: return "no_solution";
    case Outcome::not_admissible: return "not_admissible";
  }
  return "unknown";
}

/// Table symbol: check mark, dash, cross, or "n/a" for not admissible.
inline const char* symbol(Outcome o) {
  switch (o) {
    case Outcome::optimal: return "✓";
    case Outcome::suboptimal: return "-";
    case Outcome::no_solution: return "×";
    case Outcome::not_admissible: return "n/a";
  }
  return "?";
}

/// Threshold an outcome is judged against.
struct Reference {
  double cost = 0.0;
  double abs_tol = 1e-3;
  double rel_tol = 0.0;

  bool reached_by(double c) const {
    return std::isfinite(c) && c <= cost + std::max(abs_tol, rel_tol * std::abs(cost));
  }
};

/// Classification of one solver run:
///   not_admissible  derivative information vanished at U_0 and the iterate never moved,
///   optimal         final cost within tolerance of the reference,
///   suboptimal      stopping criterion met above the tolerance,
///   no_solution     iteration cap or error.
/// Without a reference a converged run counts as optimal.
inline Outcome classify(const SolverResult& run, const Vector& u0,
                        const std::optional<Reference>& reference) {
  const SolverTrace& t = run.trace;
  if (t.vanishing_derivative && run.solution == u0 && t.status != SolverStatus::error) {
    return Outcome::not_admissible;
  }
  if (t.status == SolverStatus::error) return Outcome::no_solution;
  if (reference) {
    if (reference->reached_by(t.final_cost())) return Outcome::optimal;
    return t.status == SolverStatus::converged ? Outcome::suboptimal : Outcome::no_solution;
  }
  return t.status == SolverStatus::converged ? Outcome::optimal : Outcome::no_solution;
}

// ---------------------------------------------------------------------------
// Configuration

inline Vector vector_from_json(const json& j, Index dim, const char* what) {
  if (j.is_number()) return Vector::Constant(dim, j.get<double>());
  if (!j.is_array() || static_cast<Index>(j.size()) != dim) {
    throw ConfigError(std::string(what) + " must be a number or an array of length " +
                      std::to_string(dim));
  }
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string(what) + " must be a non-empty array of rows");
  }
  const Index rows = static_cast<Index>(j.size()), cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ConfigError(std::string(what) + " rows must all have the same length");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline DoubleIntegratorSpec double_integrator_from_json(const json& j) {
  DoubleIntegratorSpec s = DoubleIntegratorSpec::with_dt(j.value("dt", 0.1));
  s.horizon = j.value("horizon", s.horizon);
  if (j.contains("a")) s.a = matrix_from_json(j["a"], "a");
  if (j.contains("b")) s.b = matrix_from_json(j["b"], "b");
  if (j.contains("q")) s.q = matrix_from_json(j["q"], "q");
  if (j.contains("r")) s.r = matrix_from_json(j["r"], "r");
  if (j.contains("q_terminal")) s.q_terminal = matrix_from_json(j["q_terminal"], "q_terminal");
  if (j.contains("x0")) s.x0 = vector_from_json(j["x0"], s.a.rows(), "x0");
  return s;
}

inline FurutaSpec furuta_from_json(const json& j) {
  FurutaSpec s;
  s.arm_inertia = j.value("arm_inertia", s.arm_inertia);
  s.arm_length = j.value("arm_length", s.arm_length);
  s.pendulum_mass = j.value("pendulum_mass", s.pendulum_mass);
  s.pendulum_com = j.value("pendulum_com", s.pendulum_com);
  s.pendulum_inertia = j.value("pendulum_inertia", s.pendulum_inertia);
  s.arm_damping = j.value("arm_damping", s.arm_damping);
  s.pendulum_damping = j.value("pendulum_damping", s.pendulum_damping);
  s.gravity = j.value("gravity", s.gravity);
  s.dt = j.value("dt", s.dt);
  s.horizon = j.value("horizon", s.horizon);
  if (j.contains("x0")) s.x0 = vector_from_json(j["x0"], 4, "x0");
  if (j.contains("reference")) s.reference = vector_from_json(j["reference"], 4, "reference");
  if (j.contains("state_weights")) {
    s.state_weights = vector_from_json(j["state_weights"], 4, "state_weights");
  }
  s.input_weight = j.value("input_weight", s.input_weight);
  s.friction_enabled = j.value("friction", s.friction_enabled);
  s.input_scale = j.value("input_scale", s.input_scale);
  s.friction_threshold = j.value("friction_threshold", 0.05 * s.input_scale);
  return s;
}

/// Builds a benchmark problem from {"type": ..., "params": {...}}.
inline ControlProblem problem_from_json(const json& j) {
  const std::string type = j.value("type", "");
  const json params = j.value("params", json::object());
  if (type == "rosenbrock") return make_rosenbrock();
  if (type == "rastrigin") return make_rastrigin();
  if (type == "heaviside") return make_heaviside();
  if (type == "double_integrator") return make_double_integrator(double_integrator_from_json(params));
  if (type == "furuta") return make_furuta(furuta_from_json(params));
  throw ConfigError("unknown problem type '" + type +
                    "' (expected rosenbrock, rastrigin, heaviside, double_integrator, furuta)");
}

inline StopCriteria stop_from_json(const json& j) {
  StopCriteria s;
  s.step_tol = j.value("step_tol", s.step_tol);
  s.grad_tol = j.value("grad_tol", s.grad_tol);
  return s;
}

inline StepLengthGrid grid_from_json(const json& j, Index default_count) {
  StepLengthGrid g;
  g.gamma = j.value("gamma", g.gamma);
  g.count = j.value("grid_points", default_count);
  g.extra_magnifying = j.value("magnifying_points", 0);
  if (j.value("literal_grid", false)) g.kind = StepGridKind::magnifying;
  return g;
}

inline DiagonalCovariance covariance_from_json(const json& j, Index dim) {
  if (!j.contains("sigma")) throw ConfigError("stochastic methods need 'sigma'");
  Vector sd = vector_from_json(j["sigma"], dim, "sigma");
  return DiagonalCovariance(sd.cwiseProduct(sd));
}

/// Solver settings of one method, in the form the drivers consume.
struct MethodSettings {
  Method method = Method::ggn_fd;
  FdSolverConfig fd;
  MppiConfig mppi;
  GnMppiConfig gn;
};

inline MethodSettings method_from_json(Method method, const json& j, Index dim) {
  MethodSettings s;
  s.method = method;
  switch (method) {
    case Method::ggn_fd:
    case Method::gradient_descent:
      s.fd.max_iters = j.value("max_iters", s.fd.max_iters);
      s.fd.fd_step = j.value("fd_step", s.fd.fd_step);
      s.fd.grid = grid_from_json(j, s.fd.grid.count);
      s.fd.mu = j.value("mu", s.fd.mu);
      s.fd.stop = stop_from_json(j);
      s.fd.terminate_on_rejection = j.value("terminate_on_rejection", true);
      break;
    case Method::mppi:
      s.mppi.lambda = j.value("lambda", s.mppi.lambda);
      s.mppi.cov = covariance_from_json(j, dim);
      s.mppi.samples = j.value("samples", s.mppi.samples);
      s.mppi.max_iters = j.value("max_iters", s.mppi.max_iters);
      s.mppi.antithetic = j.value("antithetic", true);
      s.mppi.shrink = j.value("shrink", 1.0);
      s.mppi.stop = stop_from_json(j);
      s.mppi.validate(dim);
      break;
    case Method::gn_mppi:
      s.gn.max_iters = j.value("max_iters", s.gn.max_iters);
      s.gn.samples = j.value("samples", s.gn.samples);
      s.gn.cov = covariance_from_json(j, dim);
      s.gn.shrink = j.value("shrink", s.gn.shrink);
      s.gn.grid = grid_from_json(j, s.gn.samples);
      s.gn.mu = j.value("mu", s.gn.mu);
      s.gn.stop = stop_from_json(j);
      s.gn.antithetic = j.value("antithetic", true);
      s.gn.exact_center_residual = j.value("exact_center_residual", false);
      s.gn.terminate_on_rejection = j.value("terminate_on_rejection", false);
      s.gn.validate(dim);
      break;
  }
  return s;
}

inline SolverResult run_method(const ControlProblem& problem, const MethodSettings& s,
                               std::uint64_t seed, BatchEvaluator& evaluator) {
  const Vector& u0 = problem.initial_guess;
  switch (s.method) {
    case Method::ggn_fd: return solve_ggn_fd(problem, u0, s.fd, evaluator);
    case Method::gradient_descent: return solve_gradient_descent_fd(problem, u0, s.fd, evaluator);
    case Method::mppi: {
      MppiConfig cfg = s.mppi;
      cfg.seed = seed;
      return solve_mppi(problem, u0, cfg, evaluator);
    }
    case Method::gn_mppi: {
      GnMppiConfig cfg = s.gn;
      cfg.seed = seed;
      return solve_gn_mppi(problem, u0, cfg, evaluator);
    }
  }
  throw ConfigError("unhandled method");
}

/// One (problem, method) cell of a suite.
struct ExperimentConfig {
  std::string problem_id;
  json problem;
  MethodSettings settings;
  /// Seeds for stochastic methods; deterministic methods run once.
  std::vector<std::uint64_t> seeds{0};
  /// Overrides the problem's own optimum tolerance when set.
  std::optional<double> optimum_tol;
  double reference_rel_tol = 1e-2;
  std::optional<double> reference_cost;
  unsigned workers = 1;
  bool keep_traces = true;
};

struct RunRecord {
  std::uint64_t seed = 0;
  Index iterations = 0;
  Outcome status = Outcome::no_solution;
  SolverStatus solver_status = SolverStatus::iteration_cap;
  double final_cost = 0.0;
  std::size_t batches = 0;
  std::size_t evaluator_batches = 0;
  double wall_ms = 0.0;
  std::string error;
  SolverTrace trace;
  Vector solution;
  bool vanishing_derivative = false;
  bool moved = true;
};

struct OutcomeRecord {
  std::string problem_id;
  Method method = Method::ggn_fd;
  std::vector<RunRecord> runs;
  Index median_iterations = 0;
  double success_fraction = 0.0;
  Outcome status = Outcome::no_solution;
  double final_cost = 0.0;
};

inline std::optional<Reference> reference_for(const ControlProblem& problem,
                                              const ExperimentConfig& cfg) {
  if (problem.known_optimum) {
    return Reference{problem.known_optimum->cost,
                     cfg.optimum_tol.value_or(problem.known_optimum->tolerance), 0.0};
  }
  if (cfg.reference_cost) {
    return Reference{*cfg.reference_cost, cfg.optimum_tol.value_or(kDefaultOptimumTol),
                     cfg.reference_rel_tol};
  }
  return std::nullopt;
}

/// Median iteration count, success fraction and the cell status (optimal if
/// at least half of the runs are optimal, else the most frequent outcome).
inline void aggregate(OutcomeRecord& out) {
  if (out.runs.empty()) return;
  std::vector<Index> its;
  std::vector<double> costs;
  std::array<int, 4> counts{};
  for (const auto& r : out.runs) {
    its.push_back(r.iterations);
    costs.push_back(r.final_cost);
    ++counts[static_cast<std::size_t>(r.status)];
  }
  std::sort(its.begin(), its.end());
  std::sort(costs.begin(), costs.end());
  const std::size_t mid = (its.size() - 1) / 2;
  out.median_iterations = its[mid];
  out.final_cost = costs[mid];
  const int n = static_cast<int>(out.runs.size());
  out.success_fraction = static_cast<double>(counts[0]) / n;
  if (2 * counts[0] >= n) {
    out.status = Outcome::optimal;
    return;
  }
  int best = -1;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (best < 0 || counts[i] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  out.status = static_cast<Outcome>(best);
}

/// Runs one cell (every seed for stochastic methods) and classifies each run.
inline OutcomeRecord run_experiment(const ExperimentConfig& cfg) {
  const ControlProblem problem = problem_from_json(cfg.problem);
  if (is_stochastic(cfg.settings.method) && cfg.seeds.empty()) {
    throw ConfigError("stochastic methods need at least one seed");
  }
  const std::vector<std::uint64_t> seeds =
      is_stochastic(cfg.settings.method) ? cfg.seeds : std::vector<std::uint64_t>{0};
  const auto reference = reference_for(problem, cfg);

  OutcomeRecord out;
  out.problem_id = cfg.problem_id;
  out.method = cfg.settings.method;
  for (std::uint64_t seed : seeds) {
    BatchEvaluator evaluator(cfg.workers);
    Stopwatch clock;
    SolverResult res = run_method(problem, cfg.settings, seed, evaluator);
    RunRecord rec;
    rec.seed = seed;
    rec.wall_ms = clock.elapsed_ms();
    rec.iterations = res.trace.iterations();
    rec.solver_status = res.trace.status;
    rec.final_cost = res.trace.final_cost();
    rec.batches = res.trace.total_batches();
    rec.evaluator_batches = evaluator.batches();
    rec.error = res.trace.error_message;
    rec.vanishing_derivative = res.trace.vanishing_derivative;
    rec.moved = res.solution != problem.initial_guess;
    rec.status = classify(res, problem.initial_guess, reference);
    rec.solution = res.solution;
    if (cfg.keep_traces) rec.trace = std::move(res.trace);
    out.runs.push_back(std::move(rec));
  }
  aggregate(out);
  return out;
}

/// Re-classifies runs against `reference` (used for problems without a known
/// optimum once the best cost of the row is known).
inline void reclassify(OutcomeRecord& cell, const Reference& reference) {
  for (auto& r : cell.runs) {
    if (r.status == Outcome::not_admissible) continue;
    if (r.solver_status == SolverStatus::error) {
      r.status = Outcome::no_solution;
    } else if (reference.reached_by(r.final_cost)) {
      r.status = Outcome::optimal;
    } else {
      r.status = r.solver_status == SolverStatus::converged ? Outcome::suboptimal
                                                            : Outcome::no_solution;
    }
  }
  aggregate(cell);
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<unsigned> workers;
  std::optional<Index> max_iters_override;
  bool record_timing = false;
  bool write_traces = true;
};

struct Suite {
  std::vector<std::string> problem_order;
  std::vector<ExperimentConfig> cells;
};

inline Suite suite_from_json(const json& j, const SuiteOptions& opts = {}) {
  Suite suite;
  std::vector<std::uint64_t> seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  if (opts.seed_override) seeds = {*opts.seed_override};
  const unsigned workers = opts.workers.value_or(j.value("workers", 1u));
  std::optional<double> optimum_tol;
  if (j.contains("optimum_tol")) optimum_tol = j["optimum_tol"].get<double>();
  const double rel_tol = j.value("reference_rel_tol", 1e-2);

  for (const auto& pj : j.value("problems", json::array())) {
    if (!pj.contains("id")) throw ConfigError("every problem needs an 'id'");
    const std::string id = pj["id"].get<std::string>();
    if (std::find(suite.problem_order.begin(), suite.problem_order.end(), id) !=
        suite.problem_order.end()) {
      throw ConfigError("duplicate problem id '" + id + "'");
    }
    suite.problem_order.push_back(id);
    const ControlProblem probe = problem_from_json(pj);
    const json methods = pj.value("methods", json::object());
    for (const auto& [letter, mj] : methods.items()) {
      ExperimentConfig cell;
      cell.problem_id = id;
      cell.problem = pj;
      try {
        cell.settings = method_from_json(method_from_letter(letter), mj, probe.dim());
      } catch (const Error& e) {
        throw ConfigError("problem '" + id + "', method " + letter + ": " + e.what());
      }
      if (opts.max_iters_override) {
        cell.settings.fd.max_iters = *opts.max_iters_override;
        cell.settings.mppi.max_iters = *opts.max_iters_override;
        cell.settings.gn.max_iters = *opts.max_iters_override;
      }
      cell.seeds = seeds;
      if (mj.contains("seeds") && !opts.seed_override) {
        cell.seeds = mj["seeds"].get<std::vector<std::uint64_t>>();
      }
      if (is_stochastic(cell.settings.method) && cell.seeds.empty()) {
        throw ConfigError("problem '" + id + "', method " + letter + ": seed list is empty");
      }
      cell.optimum_tol = optimum_tol;
      if (pj.contains("optimum_tol")) cell.optimum_tol = pj["optimum_tol"].get<double>();
      cell.reference_rel_tol = pj.value("reference_rel_tol", rel_tol);
      if (pj.contains("reference_cost")) cell.reference_cost = pj["reference_cost"].get<double>();
      cell.workers = workers;
      suite.cells.push_back(std::move(cell));
    }
  }
  return suite;
}

inline Suite load_suite(const std::filesystem::path& path, const SuiteOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open suite config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("malformed suite config '" + path.string() + "': " + e.what());
  }
  return suite_from_json(j, opts);
}

/// Runs every cell. Problems without a known optimum are judged against the
/// lowest final cost reached by any run in their row.
inline std::vector<OutcomeRecord> run_cells(const Suite& suite) {
  std::vector<OutcomeRecord> results;
  for (const auto& cell : suite.cells) {
    try {
      results.push_back(run_experiment(cell));
    } catch (const Error& e) {
      OutcomeRecord failed;
      failed.problem_id = cell.problem_id;
      failed.method = cell.settings.method;
      RunRecord r;
      r.error = e.what();
      r.solver_status = SolverStatus::error;
      r.final_cost = std::numeric_limits<double>::quiet_NaN();
      failed.runs.push_back(std::move(r));
      aggregate(failed);
      results.push_back(std::move(failed));
    }
  }

  for (const auto& id : suite.problem_order) {
    const auto cell_it = std::find_if(suite.cells.begin(), suite.cells.end(),
                                      [&](const auto& c) { return c.problem_id == id; });
    if (cell_it == suite.cells.end()) continue;
    const ControlProblem problem = problem_from_json(cell_it->problem);
    if (problem.known_optimum || cell_it->reference_cost) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
      if (r.problem_id != id) continue;
      for (const auto& run : r.runs) {
        if (run.solver_status != SolverStatus::error && std::isfinite(run.final_cost)) {
          best = std::min(best, run.final_cost);
        }
      }
    }
    if (!std::isfinite(best)) continue;
    const Reference ref{best, cell_it->optimum_tol.value_or(kDefaultOptimumTol),
                        cell_it->reference_rel_tol};
    for (auto& r : results) {
      if (r.problem_id == id) reclassify(r, ref);
    }
  }
  return results;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Machine-readable results, one row per run:
/// problem,method,seed,iterations,status,final_cost,batches,wall_ms
/// wall_ms is left empty unless timing is recorded, so the file is
/// reproducible byte for byte.
inline std::string results_csv(const std::vector<OutcomeRecord>& results, bool record_timing) {
  std::ostringstream os;
  os << "problem,method,seed,iterations,status,final_cost,batches,wall_ms\n";
  for (const auto& cell : results) {
    for (const auto& r : cell.runs) {
      os << cell.problem_id << ',' << method_letter(cell.method) << ','
         << (is_stochastic(cell.method) ? std::to_string(r.seed) : std::string("-")) << ','
         << r.iterations << ',' << to_string(r.status) << ',' << format_double(r.final_cost)
         << ',' << r.batches << ',';
      if (record_timing) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

/// Problems as rows, methods A-D as columns; each cell shows the (median)
/// iteration count and the outcome symbol.
inline std::string render_table(const std::vector<std::string>& problem_order,
                                const std::vector<OutcomeRecord>& results) {
  constexpr std::array<Method, 4> kMethods{Method::ggn_fd, Method::gradient_descent,
                                           Method::mppi, Method::gn_mppi};
  auto find = [&](const std::string& id, Method m) -> const OutcomeRecord* {
    for (const auto& r : results) {
      if (r.problem_id == id && r.method == m) return &r;
    }
    return nullptr;
  };
  auto pad = [](std::string s, std::size_t width) {
    // Count code points so the check mark and cross do not skew the columns.
    std::size_t cps = 0;
    for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
    if (cps < width) s.append(width - cps, ' ');
    return s;
  };

  std::ostringstream os;
  os << pad("Problem", 10);
  for (Method m : kMethods) os << pad(std::string(1, method_letter(m)), 18);
  os << '\n';
  for (const auto& id : problem_order) {
    bool any = false;
    for (Method m : kMethods) any = any || find(id, m) != nullptr;
    if (!any) continue;
    os << pad(id, 10);
    for (Method m : kMethods) {
      const OutcomeRecord* r = find(id, m);
      std::string cell = "";
      if (r == nullptr) {
        cell = ".";
      } else if (r->status == Outcome::not_admissible) {
        cell = "not admissible";
      } else {
        cell = std::to_string(r->median_iterations) + " " + symbol(r->status);
      }
      os << pad(cell, 18);
    }
    os << '\n';
  }
  return os.str();
}

/// One row per iterate: k,cost,step_norm,grad_norm.
inline std::string trace_csv(const SolverTrace& trace) {
  std::ostringstream os;
  os << "k,cost,step_norm,grad_norm\n";
  for (const auto& r : trace.records) {
    os << r.k << ',' << format_double(r.cost) << ',' << format_double(r.step_norm) << ','
       << format_double(r.grad_norm) << '\n';
  }
  return os.str();
}

struct SuiteReport {
  std::vector<OutcomeRecord> results;
  std::string csv;
  std::string table;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

/// Runs a suite and writes results.csv, table.txt and traces/ under `out_dir`.
inline SuiteReport run_suite(const Suite& suite, const std::filesystem::path& out_dir,
                             const SuiteOptions& opts = {}) {
  SuiteReport report;
  report.results = run_cells(suite);
  report.csv = results_csv(report.results, opts.record_timing);
  report.table = render_table(suite.problem_order, report.results);

  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "results.csv", report.csv);
  write_text(out_dir / "table.txt", report.table);
  if (opts.write_traces) {
    const auto trace_dir = out_dir / "traces";
    std::filesystem::create_directories(trace_dir);
    for (const auto& cell : report.results) {
      for (const auto& r : cell.runs) {
        if (r.trace.records.empty()) continue;
        std::string name = cell.problem_id + "_" + method_letter(cell.method);
        if (is_stochastic(cell.method)) name += "_seed" + std::to_string(r.seed);
        write_text(trace_dir / (name + ".csv"), trace_csv(r.trace));
      }
    }
  }
  return report;
}

inline SuiteReport run_suite(const std::filesystem::path& config,
                             const std::filesystem::path& out_dir,
                             const SuiteOptions& opts = {}) {
  return run_suite(load_suite(config, opts), out_dir, opts);
}

// ---------------------------------------------------------------------------
// Smoothing figure data

struct SmoothingRow {
  double sigma = 0.0;
  double u = 0.0;
  double step = 0.0;
  double smoothed_mc = 0.0;
  double smoothed_exact = 0.0;
};

/// Heaviside step and its Gaussian smoothing, sampled and in closed form
/// (the normal CDF of u / sigma), for every sigma and grid point.
inline std::vector<SmoothingRow> smoothing_figure_data(const std::vector<double>& sigmas,
                                                       const std::vector<double>& grid,
                                                       Index samples, std::uint64_t seed) {
  const ControlProblem heaviside = make_heaviside();
  std::vector<SmoothingRow> rows;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw InvalidArgument("smoothing sigma must be positive");
    const DiagonalCovariance cov = DiagonalCovariance::isotropic(1, sigma * sigma);
    for (double u : grid) {
      const Vector uu = Vector::Constant(1, u);
      SmoothingRow row;
      row.sigma = sigma;
      row.u = u;
      row.step = heaviside.residual->eval(uu)[0];
      row.smoothed_mc = smoothed_residual(*heaviside.residual, uu, cov, samples, seed, true)[0];
      row.smoothed_exact = 0.5 * std::erfc(-u / (sigma * std::numbers::sqrt2));
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string smoothing_csv(const std::vector<SmoothingRow>& rows) {
  std::ostringstream os;
  os << "sigma,u,step,smoothed_mc,smoothed_exact\n";
  for (const auto& r : rows) {
    os << format_double(r.sigma) << ',' << format_double(r.u) << ',' << format_double(r.step)
       << ',' << format_double(r.smoothed_mc) << ',' << format_double(r.smoothed_exact) << '\n';
  }
  return os.str();
}

}  // namespace gnmppi::bench

#endif  // GNMPPI_BENCH_HPP
