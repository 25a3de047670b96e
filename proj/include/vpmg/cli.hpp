#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpmg/dense_oracle.hpp"
#include "vpmg/multigrid.hpp"
#include "vpmg/traffic_model.hpp"

namespace vpmg::cli {

inline constexpr int schema_version = 1;

inline constexpr const char* smoother_bench_csv_header =
    "schema_version,level,variant,ordering,n_b,threads,"
    "smoother_seconds_mean,vmult_seconds_mean,ratio,cell_apply_count";

inline constexpr const char* traffic_csv_header =
    "schema_version,variant,ordering,n_b,capacity,doubles_per_dof";

/// One experiment configuration, fed either from flags or a key=value
/// config file.
struct RunSpec {
  int dim = 2;
  int degree = 3;
  int level = 3;
  SmootherVariant variant = SmootherVariant::combined_colorized;
  PatchOrdering ordering = PatchOrdering::z_curve;
  std::size_t batch_size = 0; // 0: not requested
  int threads = 1;
  double tol = 1e-12;
  int repetitions = 20;
  std::size_t cache_lines = 4096;
  std::size_t line_elems = 8;
  std::string out_path;
};

inline void validate_spec(const RunSpec& spec) {
  if (spec.dim < 2 || spec.dim > 3)
    throw std::invalid_argument("dim must be 2 or 3");
  check_degree(spec.degree);
  if (spec.level < 0)
    throw std::invalid_argument("level must be non-negative");
  if (spec.batch_size > 0 && spec.variant != SmootherVariant::batched)
    throw std::invalid_argument("batch size is only meaningful for the batched variant");
  if (spec.threads < 1)
    throw std::invalid_argument("threads must be positive");
  if (spec.threads > 1 && spec.variant != SmootherVariant::batched)
    throw std::invalid_argument("only the batched variant runs multi-threaded");
  if (!(spec.tol > 0.0))
    throw std::invalid_argument("tol must be positive");
  if (spec.repetitions < 1)
    throw std::invalid_argument("reps must be positive");
  if (spec.cache_lines < 1 || spec.line_elems < 1)
    throw std::invalid_argument("cache geometry must be positive");
}

inline void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n')
      std::cout << '\n';
    return;
  }
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open output file '" + path + "'");
  os << content;
}

namespace detail {

inline double timed(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

inline nlohmann::json spec_json(const RunSpec& spec) {
  return nlohmann::json{{"dim", spec.dim},
                        {"degree", spec.degree},
                        {"level", spec.level},
                        {"variant", to_string(spec.variant)},
                        {"ordering", to_string(spec.ordering)},
                        {"batch_size", spec.batch_size},
                        {"threads", spec.threads},
                        {"tol", spec.tol},
                        {"repetitions", spec.repetitions}};
}

} // namespace detail

struct SolveOutcome {
  nlohmann::json report;
  bool converged = false;
};

/// Full multigrid solve with timing repetitions. The report is written to
/// spec.out_path (stdout if empty) and also returned.
inline SolveOutcome cmd_solve(const RunSpec& spec) {
  validate_spec(spec);

  SolveConfig config;
  config.tolerance = spec.tol;
  config.variant = spec.variant;
  config.ordering = spec.ordering;
  config.batch_size = spec.batch_size;
  config.threads = spec.threads;
  MultigridSolver solver(spec.dim, spec.degree, spec.level, config);
  const DofVector b = solver.make_rhs(1.0);

  // warm-up run, also the source of iteration counts
  DofVector u = solver.make_vector(spec.level);
  MultigridSolver::Report mg = solver.solve(u, b);

  std::vector<double> samples;
  samples.reserve(spec.repetitions);
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    DofVector x = solver.make_vector(spec.level);
    mg = solver.solve(x, b);
    samples.push_back(mg.seconds);
  }

  const double iterations = std::max(1, mg.iterations);
  nlohmann::json report = detail::spec_json(spec);
  report["schema_version"] = schema_version;
  report["command"] = "solve";
  report["dofs"] = n_dofs(spec.dim, spec.degree, spec.level);
  report["iterations"] = mg.iterations;
  report["converged"] = mg.converged;
  report["final_relative_residual"] =
      mg.initial_residual > 0.0 ? mg.final_residual / mg.initial_residual : 0.0;
  report["solve_seconds"] = {{"samples", samples}, {"mean", detail::mean(samples)}};
  report["per_iteration"] = {{"smoothing_seconds", mg.timings.smoothing / iterations},
                             {"vmult_seconds", mg.timings.residual / iterations}};
  report["breakdown"] = {{"smoothing", mg.timings.smoothing},
                         {"residual", mg.timings.residual},
                         {"transfer", mg.timings.transfer},
                         {"coarse", mg.timings.coarse}};

  write_output(spec.out_path, report.dump(2));
  return SolveOutcome{std::move(report), mg.converged};
}

struct BenchRow {
  int level = 0;
  double smoother_seconds_mean = 0.0;
  double vmult_seconds_mean = 0.0;
  double ratio = 0.0;
  std::uint64_t cell_apply_count = 0;
};

/// Times one smoothing sweep against one operator application per level.
inline std::vector<BenchRow> run_smoother_bench(const RunSpec& spec,
                                                const std::vector<int>& levels) {
  validate_spec(spec);
  std::vector<BenchRow> rows;

  for (int level : levels) {
    const MeshHierarchy mesh(spec.dim, level + 1);
    const DofGrid grid(spec.dim, spec.degree, level);
    const LaplaceOperator op(grid);
    const FdmDecomposition fdm = build_fdm(spec.degree, grid.cell_size(), spec.dim);
    const bool single_batch = spec.variant == SmootherVariant::separated_colorized ||
                              spec.variant == SmootherVariant::combined_colorized;
    const Schedule schedule =
        build_schedule(mesh, level, spec.ordering, single_batch ? 0 : spec.batch_size);

    std::unique_ptr<WorkerPool> pool;
    if (spec.variant == SmootherVariant::batched && spec.threads > 1)
      pool = std::make_unique<WorkerPool>(spec.threads);

    SmootherContext ctx;
    ctx.grid = &grid;
    ctx.op = &op;
    ctx.fdm = &fdm;
    ctx.pool = pool.get();

    DofVector u(grid.size());
    randomize_interior(u, grid, 7u);
    const DofVector b = op.assemble_rhs(1.0);

    BenchRow row;
    row.level = level;

    // cell visits of one sweep, then an untimed warm-up
    op.reset_counters();
    smooth(spec.variant, u, b, schedule, ctx);
    row.cell_apply_count = op.cell_apply_count();

    std::vector<double> sweep_times, vmult_times;
    for (int rep = 0; rep < spec.repetitions; ++rep)
      sweep_times.push_back(detail::timed([&] { smooth(spec.variant, u, b, schedule, ctx); }));

    DofVector out(grid.size());
    op.vmult(out, u); // warm-up
    for (int rep = 0; rep < spec.repetitions; ++rep)
      vmult_times.push_back(detail::timed([&] { op.vmult(out, u); }));

    row.smoother_seconds_mean = detail::mean(sweep_times);
    row.vmult_seconds_mean = detail::mean(vmult_times);
    row.ratio = row.vmult_seconds_mean > 0.0 ? row.smoother_seconds_mean / row.vmult_seconds_mean
                                             : 0.0;
    rows.push_back(row);
  }
  return rows;
}

inline std::string cmd_smoother_bench(const RunSpec& spec, const std::vector<int>& levels) {
  const std::vector<BenchRow> rows = run_smoother_bench(spec, levels);
  std::ostringstream csv;
  csv << smoother_bench_csv_header << "\n";
  for (const BenchRow& row : rows)
    csv << schema_version << ',' << row.level << ',' << to_string(spec.variant) << ','
        << to_string(spec.ordering) << ',' << spec.batch_size << ',' << spec.threads << ','
        << row.smoother_seconds_mean << ',' << row.vmult_seconds_mean << ',' << row.ratio << ','
        << row.cell_apply_count << "\n";
  const std::string text = csv.str();
  write_output(spec.out_path, text);
  return text;
}

struct TrafficRow {
  std::size_t n_b = 0;
  std::size_t capacity = 0;
  TrafficReport report;
};

/// Records one trace per batch size and replays it through every cache
/// capacity. When trace_path is given, the first recorded trace is
/// exported in the binary record format.
inline std::vector<TrafficRow> run_traffic(const RunSpec& spec,
                                           std::vector<std::size_t> batch_sizes,
                                           std::vector<std::size_t> capacities,
                                           const TraceOptions& opts = {},
                                           const std::string& trace_path = {}) {
  if (batch_sizes.empty())
    batch_sizes.push_back(spec.batch_size);
  if (capacities.empty())
    capacities.push_back(spec.cache_lines);

  const std::size_t dofs = n_dofs(spec.dim, spec.degree, spec.level);
  std::vector<TrafficRow> rows;
  bool first = true;
  for (std::size_t n_b : batch_sizes) {
    const AccessTrace trace =
        record_trace(spec.variant, spec.ordering, n_b, spec.dim, spec.degree, spec.level, opts);
    if (first && !trace_path.empty()) {
      std::ofstream os(trace_path, std::ios::binary);
      if (!os)
        throw std::runtime_error("cannot open trace file '" + trace_path + "'");
      trace.write_binary(os);
    }
    first = false;
    for (std::size_t capacity : capacities) {
      TrafficRow row;
      row.n_b = n_b;
      row.capacity = capacity;
      row.report = simulate_lru(trace, CacheConfig{capacity, spec.line_elems}, dofs);
      rows.push_back(row);
    }
  }
  return rows;
}

inline nlohmann::json traffic_report_json(const TrafficReport& report) {
  return nlohmann::json{{"loads", report.lines_loaded},
                        {"writebacks", report.lines_written_back},
                        {"doubles_per_dof", report.doubles_per_dof}};
}

inline std::string cmd_traffic(const RunSpec& spec, std::vector<std::size_t> batch_sizes,
                               std::vector<std::size_t> capacities,
                               const TraceOptions& opts = {}, const std::string& trace_path = {},
                               const std::string& report_json_path = {}) {
  validate_spec(spec);
  const std::vector<TrafficRow> rows =
      run_traffic(spec, std::move(batch_sizes), std::move(capacities), opts, trace_path);
  std::ostringstream csv;
  csv << traffic_csv_header << "\n";
  for (const TrafficRow& row : rows)
    csv << schema_version << ',' << to_string(spec.variant) << ',' << to_string(spec.ordering)
        << ',' << row.n_b << ',' << row.capacity << ',' << row.report.doubles_per_dof << "\n";
  const std::string text = csv.str();
  write_output(spec.out_path, text);

  if (!report_json_path.empty()) {
    nlohmann::json reports = nlohmann::json::array();
    for (const TrafficRow& row : rows) {
      nlohmann::json entry = traffic_report_json(row.report);
      entry["variant"] = to_string(spec.variant);
      entry["ordering"] = to_string(spec.ordering);
      entry["n_b"] = row.n_b;
      entry["capacity"] = row.capacity;
      reports.push_back(entry);
    }
    write_output(report_json_path, reports.dump(2));
  }
  return text;
}

// ---------------------------------------------------------------------
// validate: oracle-equivalence and invariant suites on small levels

struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
};

struct ValidationSummary {
  std::vector<SuiteResult> suites;

  bool all_passed() const {
    for (const SuiteResult& s : suites)
      if (s.failed > 0)
        return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json suites_json = nlohmann::json::array();
    for (const SuiteResult& s : suites)
      suites_json.push_back({{"name", s.name}, {"passed", s.passed}, {"failed", s.failed}});
    return nlohmann::json{{"schema_version", schema_version},
                          {"command", "validate"},
                          {"suites", suites_json},
                          {"all_passed", all_passed()}};
  }
};

struct ValidateOptions {
  bool inject_cell_apply_sign_flip = false; // mutation sanity hook
};

namespace detail {

class SuiteRecorder {
public:
  explicit SuiteRecorder(std::string name) { result_.name = std::move(name); }

  void check(bool ok) {
    if (ok)
      ++result_.passed;
    else
      ++result_.failed;
  }

  SuiteResult result() const { return result_; }

private:
  SuiteResult result_;
};

inline double relative_error(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace detail

inline ValidationSummary cmd_validate(const ValidateOptions& opts = {},
                                      std::ostream& os = std::cout) {
  ValidationSummary summary;
  testing::cell_apply_sign_flip.store(opts.inject_cell_apply_sign_flip);

  { // operator vs dense assembly
    detail::SuiteRecorder suite("vmult_vs_dense");
    for (const auto& [d, p, l] : std::vector<std::array<int, 3>>{
             {2, 1, 2}, {2, 2, 2}, {2, 3, 1}, {3, 2, 1}}) {
      const DofGrid grid(d, p, l);
      const LaplaceOperator op(grid);
      const DenseMatrix a = assemble_dense(d, p, l);
      DofVector u(grid.size());
      randomize_interior(u, grid, 11u);
      DofVector out(grid.size());
      op.vmult(out, u);
      const std::vector<double> got = restrict_to_interior(grid, out);
      const std::vector<double> want = a.apply(restrict_to_interior(grid, u));
      suite.check(detail::relative_error(got, want) < 1e-11);
    }
    summary.suites.push_back(suite.result());
  }

  testing::cell_apply_sign_flip.store(false);

  { // fast diagonalization inverts the dense patch matrix
    detail::SuiteRecorder suite("fdm_inverse");
    for (int d : {2, 3})
      for (int p : {1, 2, 3, 4, 5}) {
        const double h = 0.25;
        const FdmDecomposition fdm = build_fdm(p, h, d);
        const DenseMatrix aj = dense_patch_matrix(p, h, d);
        const std::size_t n = fdm.interior_size();
        std::vector<double> x(n), ax(n), back(n);
        std::uint64_t state = 5;
        for (double& v : x)
          v = vpmg::detail::unit_random(state);
        ax = aj.apply(x);
        apply_fdm(fdm, ax.data(), back.data());
        suite.check(detail::relative_error(back, x) < 1e-10);
      }
    summary.suites.push_back(suite.result());
  }

  { // the four schedule-driven variants agree
    detail::SuiteRecorder suite("smoother_equivalence");
    const int d = 2, p = 2, l = 2;
    const MeshHierarchy mesh(d, l + 1);
    const DofGrid grid(d, p, l);
    const LaplaceOperator op(grid);
    const FdmDecomposition fdm = build_fdm(p, grid.cell_size(), d);
    SmootherContext ctx;
    ctx.grid = &grid;
    ctx.op = &op;
    ctx.fdm = &fdm;
    const Schedule colored = build_schedule(mesh, l, PatchOrdering::z_curve, 0);
    const DofVector b = op.assemble_rhs(1.0);

    DofVector u0(grid.size());
    randomize_interior(u0, grid, 23u);

    DofVector u_naive = u0, u_combined = u0, u_sep = u0, u_comb_col = u0, u_batched = u0;
    smooth(SmootherVariant::naive, u_naive, b, colored, ctx);
    smooth(SmootherVariant::combined, u_combined, b, colored, ctx);
    smooth(SmootherVariant::separated_colorized, u_sep, b, colored, ctx);
    smooth(SmootherVariant::combined_colorized, u_comb_col, b, colored, ctx);
    smooth(SmootherVariant::batched, u_batched, b, colored, ctx);

    suite.check(detail::relative_error(u_combined.values(), u_naive.values()) < 1e-12);
    suite.check(detail::relative_error(u_comb_col.values(), u_sep.values()) < 1e-12);
    suite.check(u_batched.values() == u_comb_col.values());
    summary.suites.push_back(suite.result());
  }

  { // local residual equals the gathered global residual
    detail::SuiteRecorder suite("patch_residual");
    const int d = 2, p = 3, l = 2;
    const MeshHierarchy mesh(d, l + 1);
    const DofGrid grid(d, p, l);
    const LaplaceOperator op(grid);
    DofVector u(grid.size()), b(grid.size());
    randomize_interior(u, grid, 31u);
    randomize_interior(b, grid, 37u);
    DofVector r(grid.size());
    op.residual(r, u, b);
    for (const PatchId& patch : enumerate_patches(mesh, l)) {
      const PatchIndexSets sets = patch_index_sets(grid, patch);
      std::vector<double> local(sets.interior_size());
      op.patch_residual(sets, u, b, local.data());
      std::vector<double> global(sets.interior_size());
      gather(r, sets.interior, global.data());
      suite.check(detail::relative_error(local, global) < 1e-12);
    }
    summary.suites.push_back(suite.result());
  }

  { // transfers are exact transposes of each other
    detail::SuiteRecorder suite("transfer_adjoint");
    MultigridSolver solver(2, 3, 2);
    for (int coarse = 0; coarse < 2; ++coarse) {
      DofVector w = solver.make_vector(coarse);
      DofVector v = solver.make_vector(coarse + 1);
      randomize_interior(w, solver.grid(coarse), 41u);
      randomize_interior(v, solver.grid(coarse + 1), 43u);
      const double lhs = dot(solver.restrict_to_coarse(coarse, v), w);
      const double rhs = dot(v, solver.prolongate(coarse, w));
      suite.check(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
    }
    summary.suites.push_back(suite.result());
  }

  { // schedule partitions every patch exactly once, disjoint per entry
    detail::SuiteRecorder suite("schedule_invariants");
    for (const auto& [d, l] : std::vector<std::array<int, 2>>{{2, 3}, {3, 2}}) {
      const MeshHierarchy mesh(d, l + 1);
      for (PatchOrdering ordering : {PatchOrdering::z_curve, PatchOrdering::hierarchical}) {
        const Schedule schedule = build_schedule(mesh, l, ordering, 5);
        std::size_t count = 0;
        bool disjoint = true;
        for (const auto& batch : schedule.batches)
          for (const auto& color : batch) {
            count += color.size();
            for (std::size_t i = 0; i < color.size(); ++i)
              for (std::size_t j = i + 1; j < color.size(); ++j) {
                bool overlap = true;
                for (int k = 0; k < d; ++k) {
                  const int diff = color[i].vertex[k] - color[j].vertex[k];
                  if (diff >= 2 || diff <= -2)
                    overlap = false;
                }
                if (overlap)
                  disjoint = false;
              }
          }
        suite.check(count == mesh.n_patches(l));
        suite.check(disjoint);
      }
    }
    summary.suites.push_back(suite.result());
  }

  for (const SuiteResult& s : summary.suites)
    os << (s.failed == 0 ? "PASS" : "FAIL") << "  " << s.name << ": " << s.passed << " passed, "
       << s.failed << " failed\n";
  os << (summary.all_passed() ? "validate: all suites passed" : "validate: FAILURES detected")
     << "\n";
  return summary;
}

} // namespace vpmg::cli
