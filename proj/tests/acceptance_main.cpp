// Acceptance suite: end-to-end checks of the solver stack, one line of
// output per criterion. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "vpmg/cli.hpp"
#include "vpmg/dense_oracle.hpp"
#include "vpmg/multigrid.hpp"
#include "vpmg/traffic_model.hpp"

using namespace vpmg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double relative_l2(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

std::string format(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome oracle_equivalence() {
  Outcome out;
  double worst = 0.0;
  for (int d : {2, 3}) {
    for (int p : {1, 3, 5}) {
      for (int l = 0; l <= 2; ++l) {
        const DofGrid grid(d, p, l);
        if (grid.n_interior_dofs() > 20'000)
          continue; // dense assembly cap
        const LaplaceOperator op(grid);
        const DenseMatrix a = assemble_dense(d, p, l);
        DofVector u(grid.size());
        randomize_interior(u, grid, 100u + l + 10u * p + static_cast<unsigned>(d));
        DofVector av(grid.size());
        op.vmult(av, u);
        const std::vector<double> got = restrict_to_interior(grid, av);
        const std::vector<double> want = a.apply(restrict_to_interior(grid, u));
        worst = std::max(worst, relative_l2(got, want));
      }
    }
  }
  out.pass = worst < 1e-11;
  out.detail = "max relative error " + format(worst);
  return out;
}

// ---------------------------------------------------------------- 2
Outcome fdm_exactness() {
  Outcome out;
  double worst = 0.0;
  std::uint64_t state = 3;
  for (int d : {2, 3}) {
    for (int p = 1; p <= 5; ++p) {
      const double h = 1.0 / 16.0;
      const FdmDecomposition fdm = build_fdm(p, h, d);
      const DenseMatrix aj = dense_patch_matrix(p, h, d);
      const std::size_t n = fdm.interior_size();
      std::vector<double> x(n), back(n);
      for (double& v : x)
        v = detail::unit_random(state);
      const std::vector<double> ax = aj.apply(x);
      apply_fdm(fdm, ax.data(), back.data());
      worst = std::max(worst, relative_l2(back, x));
    }
  }
  out.pass = worst < 1e-10;
  out.detail = "max relative error " + format(worst) + " (patch sizes up to 9^3)";
  return out;
}

// ---------------------------------------------------------------- 3
Outcome smoother_equivalence() {
  Outcome out;
  double worst_ab = 0.0;
  bool bitwise = true;
  for (int l = 0; l <= 2; ++l) {
    const int d = 2, p = 3;
    const MeshHierarchy mesh(d, l + 1);
    const DofGrid grid(d, p, l);
    const LaplaceOperator op(grid);
    const FdmDecomposition fdm = build_fdm(p, grid.cell_size(), d);
    const Schedule colored = build_schedule(mesh, l, PatchOrdering::z_curve, 0);
    SmootherContext ctx;
    ctx.grid = &grid;
    ctx.op = &op;
    ctx.fdm = &fdm;

    const DofVector b = op.assemble_rhs(1.0);
    DofVector u0(grid.size());
    randomize_interior(u0, grid, 200u + l);

    DofVector u_naive = u0, u_combined = u0, u_sep = u0, u_cc = u0, u_batched = u0;
    smooth(SmootherVariant::naive, u_naive, b, colored, ctx);
    smooth(SmootherVariant::combined, u_combined, b, colored, ctx);
    smooth(SmootherVariant::separated_colorized, u_sep, b, colored, ctx);
    smooth(SmootherVariant::combined_colorized, u_cc, b, colored, ctx);
    smooth(SmootherVariant::batched, u_batched, b, colored, ctx);

    for (std::size_t i = 0; i < u0.size(); ++i) {
      worst_ab = std::max(worst_ab, std::abs(u_naive.values()[i] - u_combined.values()[i]));
      worst_ab = std::max(worst_ab, std::abs(u_sep.values()[i] - u_cc.values()[i]));
    }
    bitwise = bitwise && (u_batched.values() == u_cc.values());
  }
  out.pass = worst_ab < 1e-12 && bitwise;
  out.detail = "max deviation " + format(worst_ab) +
               (bitwise ? ", batched bitwise equal" : ", batched DIFFERS");
  return out;
}

// ---------------------------------------------------------------- 4
Outcome parallel_determinism() {
  Outcome out;
  const int d = 2, p = 3, l = 4;
  const MeshHierarchy mesh(d, l + 1);
  const DofGrid grid(d, p, l);
  const LaplaceOperator op(grid);
  const FdmDecomposition fdm = build_fdm(p, grid.cell_size(), d);
  const DofVector b = op.assemble_rhs(1.0);
  DofVector u0(grid.size());
  randomize_interior(u0, grid, 300u);

  bool all_equal = true;
  for (std::size_t n_b : {std::size_t{1}, std::size_t{4}, std::size_t{32}}) {
    const Schedule schedule = build_schedule(mesh, l, PatchOrdering::z_curve, n_b);

    SmootherContext serial_ctx;
    serial_ctx.grid = &grid;
    serial_ctx.op = &op;
    serial_ctx.fdm = &fdm;
    DofVector reference = u0;
    smooth(SmootherVariant::batched, reference, b, schedule, serial_ctx);

    for (int threads : {2, 8}) {
      WorkerPool pool(threads);
      SmootherContext ctx = serial_ctx;
      ctx.pool = &pool;
      DofVector u = u0;
      smooth(SmootherVariant::batched, u, b, schedule, ctx);
      all_equal = all_equal && (u.values() == reference.values());
    }
  }
  out.pass = all_equal;
  out.detail = all_equal ? "bitwise identical for threads {1,2,8} x n_B {1,4,32}"
                         : "thread count changed the result";
  return out;
}

// ---------------------------------------------------------------- 5
Outcome projection_property() {
  Outcome out;
  const int d = 2, p = 3;
  double worst = 0.0;
  std::uint64_t state = 17;
  int tested = 0;
  for (int l = 0; l <= 3 && tested < 50; ++l) {
    const MeshHierarchy mesh(d, l + 1);
    const DofGrid grid(d, p, l);
    const LaplaceOperator op(grid);
    const FdmDecomposition fdm = build_fdm(p, grid.cell_size(), d);
    SmootherContext ctx;
    ctx.grid = &grid;
    ctx.op = &op;
    ctx.fdm = &fdm;

    DofVector b(grid.size());
    randomize_interior(b, grid, 400u + l);
    const double scale = norm_inf(b);
    const int per_level = l == 0 ? 2 : 16;
    for (int trial = 0; trial < per_level && tested < 50; ++trial, ++tested) {
      DofVector u(grid.size());
      randomize_interior(u, grid, 500u + 31u * tested);
      const int n = mesh.patches_per_dim(l);
      Index3 v{};
      for (int k = 0; k < d; ++k)
        v[k] = 1 + static_cast<int>((0.5 + 0.5 * detail::unit_random(state)) * n) % n;
      const PatchId patch{l, v};

      DofVector r(grid.size());
      op.residual(r, u, b);
      local_solve(patch, r, u, ctx);
      op.residual(r, u, b);
      const PatchIndexSets sets = patch_index_sets(grid, patch);
      for (std::size_t idx : sets.interior)
        worst = std::max(worst, std::abs(r.get(idx)) / scale);
    }
  }
  out.pass = worst < 1e-10;
  out.detail = "max patch residual after local solve " + format(worst) + " (50 patches)";
  return out;
}

// ---------------------------------------------------------------- 6
Outcome convergence() {
  // random start vector: with the tiny f=1 load and a zero start, the
  // representable-iterate floor sits right at the 1e-12 target for p=5
  // on level 5, so the reduction is measured from a generic iterate
  Outcome out;
  out.pass = true;
  std::string detail;
  for (int p : {3, 5}) {
    std::vector<int> counts;
    for (int l : {3, 4, 5}) {
      MultigridSolver solver(2, p, l);
      DofVector u = solver.make_vector(l);
      randomize_interior(u, solver.grid(l), 600u + l);
      const DofVector b = solver.make_rhs(1.0);
      const auto report = solver.solve(u, b);
      counts.push_back(report.iterations);
      out.pass = out.pass && report.converged && report.iterations <= 10;
    }
    const int spread = *std::max_element(counts.begin(), counts.end()) -
                       *std::min_element(counts.begin(), counts.end());
    out.pass = out.pass && spread <= 1;
    detail += "2D p=" + std::to_string(p) + ": iterations " + std::to_string(counts[0]) + "/" +
              std::to_string(counts[1]) + "/" + std::to_string(counts[2]) + "; ";
  }
  {
    MultigridSolver solver(3, 5, 2);
    DofVector u = solver.make_vector(2);
    randomize_interior(u, solver.grid(2), 611u);
    const DofVector b = solver.make_rhs(1.0);
    const auto report = solver.solve(u, b);
    out.pass = out.pass && report.converged && report.iterations <= 10;
    detail += "3D p=5: " + std::to_string(report.iterations);
  }
  out.detail = detail;
  return out;
}

// ---------------------------------------------------------------- 7
Outcome cost_structure() {
  Outcome out;
  cli::RunSpec spec;
  spec.dim = 2;
  spec.degree = 5;
  spec.variant = SmootherVariant::combined;
  spec.repetitions = 20;
  spec.level = 6;

  bool counters_exact = true;
  double ratio_l6 = 0.0, flatness = 0.0;
  // the counter check is exact; the wall-clock checks get one retry
  // since a scheduler hiccup can distort a single timing run
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::vector<cli::BenchRow> rows = cli::run_smoother_bench(spec, {4, 5, 6});
    counters_exact = true;
    double ratio_min = 1e300, ratio_max = 0.0;
    for (const cli::BenchRow& row : rows) {
      const std::uint64_t patches =
          static_cast<std::uint64_t>((1 << (row.level + 1)) - 1) * ((1 << (row.level + 1)) - 1);
      counters_exact = counters_exact && (row.cell_apply_count == 4 * patches);
      ratio_min = std::min(ratio_min, row.ratio);
      ratio_max = std::max(ratio_max, row.ratio);
    }
    ratio_l6 = rows.back().ratio;
    flatness = ratio_max / ratio_min;
    if (!counters_exact || (ratio_l6 >= 6.0 && ratio_l6 <= 25.0 && flatness <= 1.5))
      break;
  }

  out.pass = counters_exact && ratio_l6 >= 6.0 && ratio_l6 <= 25.0 && flatness <= 1.5;
  out.detail = "cell visits exact: " + std::string(counters_exact ? "yes" : "NO") +
               "; smoother/vmult ratio " + format(ratio_l6) + " at level 6; flatness " +
               format(flatness);
  return out;
}

// ---------------------------------------------------------------- 8
Outcome traffic_ordering() {
  Outcome out;
  const int d = 2, p = 5, l = 6;
  const std::size_t dofs = n_dofs(d, p, l);
  const std::size_t lines_footprint = (dofs + 7) / 8;
  const std::size_t capacity = lines_footprint / 25; // >= 20x smaller than the vector
  const CacheConfig cache{capacity, 8};

  auto doubles_per_dof = [&](SmootherVariant variant, PatchOrdering ordering) {
    const AccessTrace trace = record_trace(variant, ordering, 0, d, p, l);
    return simulate_lru(trace, cache, dofs).doubles_per_dof;
  };

  const double combined_z = doubles_per_dof(SmootherVariant::combined, PatchOrdering::z_curve);
  const double combined_hier =
      doubles_per_dof(SmootherVariant::combined, PatchOrdering::hierarchical);
  const double cc_z =
      doubles_per_dof(SmootherVariant::combined_colorized, PatchOrdering::z_curve);
  const double sep_z =
      doubles_per_dof(SmootherVariant::separated_colorized, PatchOrdering::z_curve);

  const bool ordering_ok = combined_z < cc_z && cc_z < sep_z && combined_z < combined_hier;

  // batch-size sweep at a capacity of ~1/16 of the vector footprint
  const CacheConfig sweep_cache{lines_footprint / 16, 8};
  double best = 1e300;
  for (std::size_t n_b : {std::size_t{4}, std::size_t{16}, std::size_t{64}, std::size_t{256},
                          std::size_t{1024}}) {
    const AccessTrace trace =
        record_trace(SmootherVariant::batched, PatchOrdering::z_curve, n_b, d, p, l);
    best = std::min(best, simulate_lru(trace, sweep_cache, dofs).doubles_per_dof);
  }
  const AccessTrace color_trace =
      record_trace(SmootherVariant::batched, PatchOrdering::z_curve, 4096, d, p, l);
  const double color_by_color = simulate_lru(color_trace, sweep_cache, dofs).doubles_per_dof;
  const bool batch_ok = best < color_by_color;

  out.pass = ordering_ok && batch_ok;
  out.detail = "doubles/DoF: combined(z) " + format(combined_z) + " < comb.col(z) " +
               format(cc_z) + " < sep.col(z) " + format(sep_z) + "; combined(hier) " +
               format(combined_hier) + "; batch sweep min " + format(best) +
               " < color-by-color " + format(color_by_color);
  return out;
}

// ---------------------------------------------------------------- 9
Outcome dof_formula() {
  Outcome out;
  out.pass = n_dofs(2, 3, 10) == 37'761'025ull && n_dofs(2, 5, 10) == 104'878'081ull &&
             n_dofs(3, 5, 6) == 263'374'721ull;
  out.detail = "37,761,025 / 104,878,081 / 263,374,721";
  return out;
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double time_limit_s;
  };
  const std::vector<Criterion> criteria = {
      {"oracle equivalence (vmult vs dense)", oracle_equivalence, 10.0},
      {"fast-diagonalization exactness", fdm_exactness, 5.0},
      {"smoother variant equivalence", smoother_equivalence, 30.0},
      {"parallel determinism of the batched smoother", parallel_determinism, 30.0},
      {"projection property of local solves", projection_property, 60.0},
      {"multigrid convergence and level robustness", convergence, 120.0},
      {"cost structure of the combined smoother", cost_structure, 120.0},
      {"cache-traffic ordering and batch-size effect", traffic_ordering, 120.0},
      {"dof-count formula", dof_formula, 1.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds < criteria[i].time_limit_s;
    const bool pass = outcome.pass && in_time;
    if (!pass)
      ++failures;
    std::printf("[%s] %zu. %s (%s; %.1f s%s)\n", pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str(), seconds,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  return failures;
}
