#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/dof_map.hpp"
#include "vpmg/laplace_operator.hpp"
#include "vpmg/mesh_hierarchy.hpp"
#include "vpmg/parallel.hpp"
#include "vpmg/patch_inverse.hpp"
#include "vpmg/shape_data.hpp"
#include "vpmg/smoothers.hpp"

namespace vpmg {

/// Embedding of a coarse cell's basis into its two children: E[a][b] is
/// the value of coarse basis b at fine support point a of the child.
/// Rows sum to one and both children agree on the shared point.
struct Prolongation1D {
  int degree = 0;
  DenseMatrix left;
  DenseMatrix right;
};

inline Prolongation1D make_prolongation_1d(int degree) {
  check_degree(degree);
  const std::vector<double> nodes = gauss_lobatto_points(degree);
  const LagrangeBasis1D basis(nodes);
  const int n = degree + 1;
  Prolongation1D prol{degree, DenseMatrix(n, n), DenseMatrix(n, n)};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      prol.left(a, b) = basis.value(b, 0.5 * nodes[a]);
      prol.right(a, b) = basis.value(b, 0.5 + 0.5 * nodes[a]);
    }
  return prol;
}

struct PhaseTimings {
  double smoothing = 0.0;
  double residual = 0.0;
  double transfer = 0.0;
  double coarse = 0.0;

  double total() const { return smoothing + residual + transfer + coarse; }
  PhaseTimings& operator+=(const PhaseTimings& o) {
    smoothing += o.smoothing;
    residual += o.residual;
    transfer += o.transfer;
    coarse += o.coarse;
    return *this;
  }
};

enum class PostSmoothOrder { forward, reversed };

struct SolveConfig {
  int pre_smooth = 1;
  int post_smooth = 1;
  PostSmoothOrder post_order = PostSmoothOrder::reversed;
  double tolerance = 1e-12;
  int max_iterations = 100;
  SmootherVariant variant = SmootherVariant::combined_colorized;
  PatchOrdering ordering = PatchOrdering::z_curve;
  std::size_t batch_size = 0; // 0: one batch per color
  int threads = 1;
  double relaxation = 1.0; // richardson only

  void validate() const {
    if (!(tolerance > 0.0))
      throw std::invalid_argument("SolveConfig: tolerance must be positive");
    if (pre_smooth < 0 || post_smooth < 0 || pre_smooth + post_smooth < 1)
      throw std::invalid_argument("SolveConfig: need at least one smoothing step");
    if (max_iterations < 0)
      throw std::invalid_argument("SolveConfig: max_iterations must be non-negative");
  }
};

namespace detail {

class PhaseTimer {
public:
  PhaseTimer(double& acc) : acc_(acc), t0_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    acc_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  double& acc_;
  std::chrono::steady_clock::time_point t0_;
};

} // namespace detail

/// Geometric V-cycle solver on the nested level hierarchy. Level 0 is the
/// single-patch mesh, where one exact patch solve is the coarse solver.
class MultigridSolver {
public:
  MultigridSolver(int dim, int degree, int finest_level, SolveConfig config = {})
      : mesh_(dim, finest_level + 1), config_(config), prolongation_(make_prolongation_1d(degree)) {
    config_.validate();
    for (int l = 0; l <= finest_level; ++l) {
      grids_.emplace_back(dim, degree, l);
      ops_.push_back(std::make_unique<LaplaceOperator>(grids_[l]));
      fdm_.push_back(build_fdm(degree, grids_[l].cell_size(), dim));
      schedules_.push_back(build_schedule(mesh_, l, config_.ordering, config_.batch_size));
    }
    if (config_.threads > 1 && config_.variant == SmootherVariant::batched)
      pool_ = std::make_unique<WorkerPool>(config_.threads);
  }

  int dim() const { return mesh_.dim; }
  int degree() const { return grids_.front().degree(); }
  int finest_level() const { return mesh_.finest_level(); }
  const DofGrid& grid(int level) const { return grids_[level]; }
  const LaplaceOperator& op(int level) const { return *ops_[level]; }
  const FdmDecomposition& fdm(int level) const { return fdm_[level]; }
  const Schedule& schedule(int level) const { return schedules_[level]; }
  const SolveConfig& config() const { return config_; }

  DofVector make_vector(int level) const { return DofVector(grids_[level].size()); }
  DofVector make_rhs(double f = 1.0) const { return ops_.back()->assemble_rhs(f); }

  /// Pointwise evaluation of the coarse finite element function at the
  /// fine support points, written cell by cell with each fine node
  /// produced exactly once.
  DofVector prolongate(int coarse_level, const DofVector& coarse) const {
    require_transfer_levels(coarse_level);
    if (coarse.size() != grids_[coarse_level].size())
      throw std::invalid_argument("prolongate: vector does not match the coarse level");
    const DofGrid& cg = grids_[coarse_level];
    const DofGrid& fg = grids_[coarse_level + 1];
    DofVector fine(fg.size());

    const int d = cg.dim();
    double coarse_cell[max_cell_tensor];
    double child_vals[max_cell_tensor];
    double buf[max_cell_tensor];

    Index3 c{};
    do {
      gather_cell(cg, c, coarse, coarse_cell);
      Index3 e{};
      do {
        apply_embedding(e, coarse_cell, child_vals, buf);
        // fine child cell index: 2c + e
        Index3 fc{};
        for (int k = 0; k < d; ++k)
          fc[k] = 2 * c[k] + e[k];
        write_owned(fg, fc, child_vals, fine);
      } while (next_multi_index(e, d, 2));
    } while (next_multi_index(c, d, cg.cells_per_dim()));

    zero_boundary(fine, fg);
    return fine;
  }

  /// Exact transpose of prolongate: reads each fine value through the
  /// same ownership mask and accumulates the transposed embedding.
  DofVector restrict_to_coarse(int coarse_level, const DofVector& fine) const {
    require_transfer_levels(coarse_level);
    if (fine.size() != grids_[coarse_level + 1].size())
      throw std::invalid_argument("restrict_to_coarse: vector does not match the fine level");
    const DofGrid& cg = grids_[coarse_level];
    const DofGrid& fg = grids_[coarse_level + 1];
    DofVector coarse(cg.size());

    const int d = cg.dim();
    double fine_vals[max_cell_tensor];
    double contrib[max_cell_tensor];
    double buf[max_cell_tensor];

    Index3 c{};
    do {
      Index3 e{};
      do {
        Index3 fc{};
        for (int k = 0; k < d; ++k)
          fc[k] = 2 * c[k] + e[k];
        gather_owned(fg, fc, fine, fine_vals);
        apply_embedding_transposed(e, fine_vals, contrib, buf);
        scatter_add_cell(cg, c, contrib, coarse);
      } while (next_multi_index(e, d, 2));
    } while (next_multi_index(c, d, cg.cells_per_dim()));

    zero_boundary(coarse, cg);
    return coarse;
  }

  void v_cycle(int level, DofVector& u, const DofVector& b, PhaseTimings* timings = nullptr) {
    PhaseTimings local;
    PhaseTimings& t = timings ? *timings : local;

    if (level == 0) {
      // the single patch spans the whole interior, so one exact patch
      // solve is the coarse solver
      detail::PhaseTimer timer(t.coarse);
      const SmootherContext ctx = context(0);
      Index3 center{};
      for (int k = 0; k < dim(); ++k)
        center[k] = 1;
      local_update(PatchId{0, center}, u, b, ctx);
      return;
    }

    const SmootherContext ctx = context(level);
    {
      detail::PhaseTimer timer(t.smoothing);
      for (int s = 0; s < config_.pre_smooth; ++s)
        smooth(config_.variant, u, b, schedules_[level], ctx, SweepDirection::forward,
               config_.relaxation);
    }

    DofVector r(grids_[level].size());
    {
      detail::PhaseTimer timer(t.residual);
      ops_[level]->residual(r, u, b);
    }

    DofVector coarse_b;
    {
      detail::PhaseTimer timer(t.transfer);
      coarse_b = restrict_to_coarse(level - 1, r);
    }
    DofVector coarse_u(grids_[level - 1].size());
    v_cycle(level - 1, coarse_u, coarse_b, &t);
    {
      detail::PhaseTimer timer(t.transfer);
      const DofVector correction = prolongate(level - 1, coarse_u);
      for (std::size_t i = 0; i < u.size(); ++i)
        u.add(i, correction.get(i));
    }

    {
      detail::PhaseTimer timer(t.smoothing);
      const bool reversed = config_.post_order == PostSmoothOrder::reversed;
      for (int s = 0; s < config_.post_smooth; ++s)
        smooth(config_.variant, u, b, schedules_[level], ctx,
               reversed ? SweepDirection::reverse : SweepDirection::forward, config_.relaxation);
    }
  }

  struct Report {
    int iterations = 0;
    bool converged = false;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    PhaseTimings timings;
    double seconds = 0.0;
  };

  /// Stationary defect-correction iteration with the V-cycle as the
  /// preconditioner, stopping on relative l2 residual reduction.
  Report solve(DofVector& u, const DofVector& b) {
    const auto t0 = std::chrono::steady_clock::now();
    Report report;
    const int level = finest_level();
    DofVector r(grids_[level].size());

    {
      detail::PhaseTimer timer(report.timings.residual);
      ops_[level]->residual_precise(r, u, b);
    }
    report.initial_residual = norm_l2(r);
    report.final_residual = report.initial_residual;
    if (report.initial_residual == 0.0) {
      report.converged = true;
      report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return report;
    }

    for (int it = 0; it < config_.max_iterations; ++it) {
      DofVector d(grids_[level].size());
      v_cycle(level, d, r, &report.timings);
      for (std::size_t i = 0; i < u.size(); ++i)
        u.add(i, d.get(i));
      ++report.iterations;

      {
        detail::PhaseTimer timer(report.timings.residual);
        ops_[level]->residual_precise(r, u, b);
      }
      report.final_residual = norm_l2(r);
      if (report.final_residual <= config_.tolerance * report.initial_residual) {
        report.converged = true;
        break;
      }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  }

  SmootherContext context(int level) const {
    SmootherContext ctx;
    ctx.grid = &grids_[level];
    ctx.op = ops_[level].get();
    ctx.fdm = &fdm_[level];
    ctx.pool = pool_.get();
    return ctx;
  }

private:
  void require_transfer_levels(int coarse_level) const {
    if (coarse_level < 0 || coarse_level + 1 > finest_level())
      throw std::invalid_argument("transfer levels out of range");
  }

  void gather_cell(const DofGrid& g, const Index3& cell, const DofVector& v, double* out) const {
    const int p = g.degree();
    Index3 t{};
    std::size_t i = 0;
    do {
      Index3 node{};
      for (int k = 0; k < g.dim(); ++k)
        node[k] = p * cell[k] + t[k];
      out[i++] = v.get(g.node_index(node));
    } while (next_multi_index(t, g.dim(), p + 1));
  }

  void scatter_add_cell(const DofGrid& g, const Index3& cell, const double* vals,
                        DofVector& v) const {
    const int p = g.degree();
    Index3 t{};
    std::size_t i = 0;
    do {
      Index3 node{};
      for (int k = 0; k < g.dim(); ++k)
        node[k] = p * cell[k] + t[k];
      v.add(g.node_index(node), vals[i++]);
    } while (next_multi_index(t, g.dim(), p + 1));
  }

  /// A fine node shared between fine cells belongs to the cell with the
  /// smaller index; within cell fc that is every node with g_k == 0 in a
  /// dimension where fc_k > 0 excluded.
  static bool owns_node(const Index3& fine_cell, const Index3& local, int dim) {
    for (int k = 0; k < dim; ++k)
      if (local[k] == 0 && fine_cell[k] > 0)
        return false;
    return true;
  }

  void write_owned(const DofGrid& fg, const Index3& fine_cell, const double* vals,
                   DofVector& fine) const {
    const int p = fg.degree();
    Index3 t{};
    std::size_t i = 0;
    do {
      if (owns_node(fine_cell, t, fg.dim())) {
        Index3 node{};
        for (int k = 0; k < fg.dim(); ++k)
          node[k] = p * fine_cell[k] + t[k];
        fine.set(fg.node_index(node), vals[i]);
      }
      ++i;
    } while (next_multi_index(t, fg.dim(), p + 1));
  }

  void gather_owned(const DofGrid& fg, const Index3& fine_cell, const DofVector& fine,
                    double* vals) const {
    const int p = fg.degree();
    Index3 t{};
    std::size_t i = 0;
    do {
      if (owns_node(fine_cell, t, fg.dim())) {
        Index3 node{};
        for (int k = 0; k < fg.dim(); ++k)
          node[k] = p * fine_cell[k] + t[k];
        vals[i] = fine.get(fg.node_index(node));
      } else {
        vals[i] = 0.0;
      }
      ++i;
    } while (next_multi_index(t, fg.dim(), p + 1));
  }

  /// vals = (kron of per-dimension child embeddings) coeffs
  void apply_embedding(const Index3& child, const double* coeffs, double* out,
                       double* buf) const {
    const int d = grids_.front().dim();
    const int n = prolongation_.degree + 1;
    Index3 ext{};
    for (int k = 0; k < d; ++k)
      ext[k] = n;
    const double* src = coeffs;
    double* dst = (d % 2 == 1) ? out : buf;
    for (int k = 0; k < d; ++k) {
      const DenseMatrix& e = child[k] == 0 ? prolongation_.left : prolongation_.right;
      detail_apply(e, ext, k, false, src, dst);
      src = dst;
      dst = (dst == out) ? buf : out;
    }
  }

  void apply_embedding_transposed(const Index3& child, const double* vals, double* out,
                                  double* buf) const {
    const int d = grids_.front().dim();
    const int n = prolongation_.degree + 1;
    Index3 ext{};
    for (int k = 0; k < d; ++k)
      ext[k] = n;
    const double* src = vals;
    double* dst = (d % 2 == 1) ? out : buf;
    for (int k = 0; k < d; ++k) {
      const DenseMatrix& e = child[k] == 0 ? prolongation_.left : prolongation_.right;
      detail_apply(e, ext, k, true, src, dst);
      src = dst;
      dst = (dst == out) ? buf : out;
    }
  }

  void detail_apply(const DenseMatrix& m, const Index3& ext, int k, bool transpose,
                    const double* src, double* dst) const {
    vpmg::detail::apply_matrix_1d(m.data(), static_cast<int>(m.rows()),
                                  static_cast<int>(m.cols()), grids_.front().dim(), ext, k,
                                  transpose, src, dst);
  }

  MeshHierarchy mesh_;
  SolveConfig config_;
  Prolongation1D prolongation_;
  std::vector<DofGrid> grids_;
  std::vector<std::unique_ptr<LaplaceOperator>> ops_;
  std::vector<FdmDecomposition> fdm_;
  std::vector<Schedule> schedules_;
  std::unique_ptr<WorkerPool> pool_;
};

} // namespace vpmg
