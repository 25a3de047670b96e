#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vpmg/dense_oracle.hpp"
#include "vpmg/multigrid.hpp"

using vpmg::DofVector;
using vpmg::make_prolongation_1d;
using vpmg::MultigridSolver;
using vpmg::Prolongation1D;
using vpmg::SolveConfig;

TEST_CASE("1D embedding matrices") {
  SECTION("rows sum to one and children agree at the shared point") {
    for (int p : {1, 2, 3, 5}) {
      const Prolongation1D prol = make_prolongation_1d(p);
      for (int a = 0; a <= p; ++a) {
        double left = 0.0, right = 0.0;
        for (int b = 0; b <= p; ++b) {
          left += prol.left(a, b);
          right += prol.right(a, b);
        }
        CHECK_THAT(left, Catch::Matchers::WithinAbs(1.0, 1e-13));
        CHECK_THAT(right, Catch::Matchers::WithinAbs(1.0, 1e-13));
      }
      for (int b = 0; b <= p; ++b)
        CHECK(prol.left(p, b) == prol.right(0, b));
    }
  }
  SECTION("linear case by hand") {
    const Prolongation1D prol = make_prolongation_1d(1);
    CHECK(prol.left(0, 0) == 1.0);
    CHECK(prol.left(1, 0) == 0.5);
    CHECK(prol.left(1, 1) == 0.5);
    CHECK(prol.right(1, 1) == 1.0);
  }
}

TEST_CASE("1D hat function prolongation") {
  MultigridSolver solver(1, 1, 1);
  DofVector coarse = solver.make_vector(0);
  coarse.set(1, 1.0); // hat at x = 1/2
  const DofVector fine = solver.prolongate(0, coarse);
  // fine nodes at x = 0, 1/4, 1/2, 3/4, 1
  REQUIRE(fine.size() == 5);
  CHECK(fine.values()[0] == 0.0);
  CHECK_THAT(fine.values()[1], Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(fine.values()[2], Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(fine.values()[3], Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK(fine.values()[4] == 0.0);

  SECTION("restriction transposes the hat") {
    DofVector unit = solver.make_vector(1);
    unit.set(2, 1.0); // fine node at x = 1/2
    const DofVector coarse_back = solver.restrict_to_coarse(0, unit);
    CHECK_THAT(coarse_back.values()[1], Catch::Matchers::WithinAbs(1.0, 1e-15));
  }
}

namespace {

// direct evaluation of a 2D finite element function at a point, the
// independent oracle for the embedding
double evaluate_fe_function(const vpmg::DofGrid& grid, const DofVector& coeffs, double x,
                            double y) {
  const int p = grid.degree();
  const vpmg::LagrangeBasis1D basis(vpmg::gauss_lobatto_points(p));
  const double h = grid.cell_size();
  const auto cell_of = [&](double t) {
    int c = static_cast<int>(t / h);
    return std::min(c, grid.cells_per_dim() - 1);
  };
  const int cx = cell_of(x), cy = cell_of(y);
  const double xi = x / h - cx, eta = y / h - cy;

  double value = 0.0;
  for (int by = 0; by <= p; ++by)
    for (int bx = 0; bx <= p; ++bx) {
      const vpmg::Index3 node{p * cx + bx, p * cy + by, 0};
      value += coeffs.values()[grid.node_index(node)] * basis.value(bx, xi) * basis.value(by, eta);
    }
  return value;
}

double node_position(const vpmg::DofGrid& grid, int g) {
  const int p = grid.degree();
  const std::vector<double> nodes = vpmg::gauss_lobatto_points(p);
  const int cell = std::min(g / p, grid.cells_per_dim() - 1);
  return (cell + nodes[g - p * cell]) * grid.cell_size();
}

} // namespace

TEST_CASE("prolongation evaluates the coarse function at fine support points") {
  MultigridSolver solver(2, 3, 2);
  const auto& cg = solver.grid(1);
  const auto& fg = solver.grid(2);

  DofVector coarse = solver.make_vector(1);
  vpmg::randomize_interior(coarse, cg, 3u);
  const DofVector fine = solver.prolongate(1, coarse);

  vpmg::Index3 f{};
  do {
    const double x = node_position(fg, f[0]);
    const double y = node_position(fg, f[1]);
    const double expected = fg.on_boundary(f) ? 0.0 : evaluate_fe_function(cg, coarse, x, y);
    CHECK(std::abs(fine.values()[fg.node_index(f)] - expected) < 1e-13);
  } while (vpmg::next_multi_index(f, 2, fg.nodes_per_dim()));

  SECTION("interpolant of one stays one away from the boundary layer") {
    DofVector ones = solver.make_vector(1);
    vpmg::Index3 c{};
    do {
      if (!cg.on_boundary(c))
        ones.values()[cg.node_index(c)] = 1.0;
    } while (vpmg::next_multi_index(c, 2, cg.nodes_per_dim()));
    const DofVector fine_ones = solver.prolongate(1, ones);
    vpmg::Index3 g{};
    do {
      const double x = node_position(fg, g[0]);
      const double y = node_position(fg, g[1]);
      const double expected = fg.on_boundary(g) ? 0.0 : evaluate_fe_function(cg, ones, x, y);
      CHECK(std::abs(fine_ones.values()[fg.node_index(g)] - expected) < 1e-13);
    } while (vpmg::next_multi_index(g, 2, fg.nodes_per_dim()));
  }

  SECTION("zero prolongates to zero") {
    DofVector zero = solver.make_vector(1);
    const DofVector fine_zero = solver.prolongate(1, zero);
    for (double x : fine_zero.values())
      CHECK(x == 0.0);
  }
}

TEST_CASE("restriction of zero is zero") {
  MultigridSolver solver(2, 3, 1);
  const DofVector zero = solver.make_vector(1);
  const DofVector coarse = solver.restrict_to_coarse(0, zero);
  for (double x : coarse.values())
    CHECK(x == 0.0);
}

TEST_CASE("restriction is the exact transpose of prolongation") {
  for (const auto& [d, p] : std::vector<std::array<int, 2>>{{1, 2}, {2, 3}, {3, 2}}) {
    MultigridSolver solver(d, p, 2);
    for (int coarse_level : {0, 1}) {
      DofVector w = solver.make_vector(coarse_level);
      DofVector v = solver.make_vector(coarse_level + 1);
      vpmg::randomize_interior(w, solver.grid(coarse_level), 4u);
      vpmg::randomize_interior(v, solver.grid(coarse_level + 1), 5u);
      const double lhs = vpmg::dot(solver.restrict_to_coarse(coarse_level, v), w);
      const double rhs = vpmg::dot(v, solver.prolongate(coarse_level, w));
      INFO("d=" << d << " p=" << p << " coarse=" << coarse_level);
      CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("level mismatch is rejected") {
  MultigridSolver solver(2, 2, 1);
  DofVector wrong(7);
  CHECK_THROWS_AS(solver.prolongate(0, wrong), std::invalid_argument);
  CHECK_THROWS_AS(solver.restrict_to_coarse(0, wrong), std::invalid_argument);
  DofVector fine = solver.make_vector(1);
  CHECK_THROWS_AS(solver.prolongate(1, fine), std::invalid_argument);
}

TEST_CASE("nested-space consistency of the transfers") {
  // the fine operator applied to embedded functions reproduces the
  // coarse operator
  MultigridSolver solver(2, 3, 2);
  DofVector v = solver.make_vector(1);
  DofVector w = solver.make_vector(1);
  vpmg::randomize_interior(v, solver.grid(1), 6u);
  vpmg::randomize_interior(w, solver.grid(1), 7u);

  const DofVector pv = solver.prolongate(1, v);
  const DofVector pw = solver.prolongate(1, w);
  DofVector fine_apv = solver.make_vector(2);
  solver.op(2).vmult(fine_apv, pv);
  DofVector coarse_av = solver.make_vector(1);
  solver.op(1).vmult(coarse_av, v);

  const double fine_form = vpmg::dot(fine_apv, pw);
  const double coarse_form = vpmg::dot(coarse_av, w);
  CHECK(std::abs(fine_form - coarse_form) < 1e-11 * std::max(1.0, std::abs(coarse_form)));
}

TEST_CASE("coarsest level solve is exact") {
  MultigridSolver solver(2, 3, 0);
  DofVector u = solver.make_vector(0);
  DofVector b = solver.make_vector(0);
  vpmg::randomize_interior(u, solver.grid(0), 8u);
  vpmg::randomize_interior(b, solver.grid(0), 9u);
  solver.v_cycle(0, u, b);
  DofVector r = solver.make_vector(0);
  solver.op(0).residual(r, u, b);
  CHECK(vpmg::norm_l2(r) < 1e-10 * vpmg::norm_l2(b));
}

TEST_CASE("v-cycle basics") {
  SECTION("zero data is a fixed point") {
    MultigridSolver solver(2, 2, 2);
    DofVector u = solver.make_vector(2);
    DofVector b = solver.make_vector(2);
    solver.v_cycle(2, u, b);
    for (double x : u.values())
      CHECK(x == 0.0);
  }
  SECTION("one cycle contracts the residual by an order of magnitude") {
    MultigridSolver solver(2, 5, 3);
    DofVector u = solver.make_vector(3);
    DofVector b = solver.make_vector(3);
    vpmg::randomize_interior(b, solver.grid(3), 10u);
    const double r0 = vpmg::norm_l2(b);
    solver.v_cycle(3, u, b);
    DofVector r = solver.make_vector(3);
    solver.op(3).residual(r, u, b);
    CHECK(vpmg::norm_l2(r) / r0 < 0.1);
  }
}

TEST_CASE("stationary solve convergence") {
  SECTION("zero right-hand side converges in zero iterations") {
    MultigridSolver solver(2, 2, 2);
    DofVector u = solver.make_vector(2);
    DofVector b = solver.make_vector(2);
    const auto report = solver.solve(u, b);
    CHECK(report.converged);
    CHECK(report.iterations == 0);
  }

  SECTION("level-robust iteration counts for p=3 and p=5") {
    std::vector<int> counts_p3, counts_p5;
    for (int level : {3, 4}) {
      for (int p : {3, 5}) {
        MultigridSolver solver(2, p, level);
        DofVector u = solver.make_vector(level);
        const DofVector b = solver.make_rhs(1.0);
        const auto report = solver.solve(u, b);
        CHECK(report.converged);
        CHECK(report.iterations <= 10);
        (p == 3 ? counts_p3 : counts_p5).push_back(report.iterations);
      }
    }
    CHECK(std::abs(counts_p3[0] - counts_p3[1]) <= 1);
    CHECK(std::abs(counts_p5[0] - counts_p5[1]) <= 1);
    // degree robustness: p=3 vs p=5 differ by at most 2 at fixed level
    CHECK(std::abs(counts_p3[0] - counts_p5[0]) <= 2);

    // one more refinement at p=3: the count stays put
    MultigridSolver solver(2, 3, 5);
    DofVector u = solver.make_vector(5);
    const DofVector b = solver.make_rhs(1.0);
    const auto report = solver.solve(u, b);
    CHECK(report.converged);
    CHECK(std::abs(report.iterations - counts_p3[1]) <= 1);
  }
}

TEST_CASE("converged solution matches the dense direct solve") {
  for (const auto& [p, level] : std::vector<std::array<int, 2>>{{3, 3}, {5, 2}}) {
    MultigridSolver solver(2, p, level);
    DofVector u = solver.make_vector(level);
    const DofVector b = solver.make_rhs(1.0);
    const auto report = solver.solve(u, b);
    REQUIRE(report.converged);

    const auto& grid = solver.grid(level);
    const vpmg::DenseMatrix a = vpmg::assemble_dense(2, p, level);
    const std::vector<double> direct =
        vpmg::direct_solve(a, vpmg::restrict_to_interior(grid, b));
    const std::vector<double> got = vpmg::restrict_to_interior(grid, u);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      num += (got[i] - direct[i]) * (got[i] - direct[i]);
      den += direct[i] * direct[i];
    }
    INFO("p=" << p << " level=" << level);
    CHECK(std::sqrt(num / den) < 1e-9);
  }
}

TEST_CASE("solve reports phase timings") {
  MultigridSolver solver(2, 3, 3);
  DofVector u = solver.make_vector(3);
  const DofVector b = solver.make_rhs(1.0);
  const auto report = solver.solve(u, b);
  REQUIRE(report.converged);
  CHECK(report.timings.smoothing > 0.0);
  CHECK(report.timings.residual > 0.0);
  CHECK(report.timings.transfer > 0.0);
  CHECK(report.timings.coarse > 0.0);
  CHECK(report.seconds >= report.timings.total() * 0.5);
}

TEST_CASE("solve config validation") {
  SolveConfig bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(MultigridSolver(2, 2, 1, bad), std::invalid_argument);
  bad = SolveConfig{};
  bad.pre_smooth = 0;
  bad.post_smooth = 0;
  CHECK_THROWS_AS(MultigridSolver(2, 2, 1, bad), std::invalid_argument);
}

TEST_CASE("post-smoothing order is configurable") {
  SolveConfig forward_cfg;
  forward_cfg.post_order = vpmg::PostSmoothOrder::forward;
  MultigridSolver forward_solver(2, 3, 2, forward_cfg);
  MultigridSolver reversed_solver(2, 3, 2);

  DofVector uf = forward_solver.make_vector(2);
  DofVector ur = reversed_solver.make_vector(2);
  const DofVector b = forward_solver.make_rhs(1.0);
  forward_solver.v_cycle(2, uf, b);
  reversed_solver.v_cycle(2, ur, b);
  CHECK(uf.values() != ur.values()); // the sweep order matters
}
