#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/dof_map.hpp"
#include "vpmg/quadrature.hpp"
#include "vpmg/shape_data.hpp"
#include "vpmg/tensor_kernels.hpp"

namespace vpmg {

namespace testing {
/// Mutation hook for the self-check machinery: negates every cell apply.
inline std::atomic<bool> cell_apply_sign_flip{false};
} // namespace testing

/// Per-level data of the cell operator: 1D shape tables at quadrature
/// points and the cached quadrature factors. Identical for every cell of
/// a level since the mesh is uniform and Cartesian.
struct CellOperatorData {
  int dim = 0;
  int degree = 0;
  int n_q = 0;
  double h = 0.0;
  ShapeData1D shape;
  std::vector<double> quad_factor; // n_q^d entries: prod(w) * h^(d-2)

  CellOperatorData() = default;
  CellOperatorData(int dim_, int degree_, double h_) : dim(dim_), degree(degree_), h(h_) {
    check_dim(dim);
    check_degree(degree);
    if (!(h > 0.0))
      throw std::invalid_argument("CellOperatorData: cell size must be positive");
    const Quadrature1D quad = gauss_quadrature(degree + 1);
    n_q = quad.size();
    shape = shape_data_1d(degree, quad);

    double h_power = 1.0;
    for (int k = 0; k < dim - 2; ++k)
      h_power *= h;
    for (int k = 0; k < 2 - dim; ++k)
      h_power /= h;

    quad_factor.resize(ipow(n_q, dim));
    Index3 q{};
    std::size_t i = 0;
    do {
      double w = h_power;
      for (int k = 0; k < dim; ++k)
        w *= quad.weights[q[k]];
      quad_factor[i++] = w;
    } while (next_multi_index(q, dim, n_q));
  }
};

/// Matrix-free action of the Laplace bilinear form on one level.
class LaplaceOperator {
public:
  LaplaceOperator(const DofGrid& grid)
      : grid_(grid), data_(grid.dim(), grid.degree(), grid.cell_size()) {
    // lexicographic offsets of the cell nodes relative to the cell base
    const int p = grid_.degree();
    const int d = grid_.dim();
    const std::size_t n1 = grid_.nodes_per_dim();
    cell_offsets_.reserve(ipow(p + 1, d));
    Index3 t{};
    do {
      std::size_t off = 0;
      for (int k = d; k-- > 0;)
        off = off * n1 + static_cast<std::size_t>(t[k]);
      cell_offsets_.push_back(off);
    } while (next_multi_index(t, d, p + 1));
  }

  const DofGrid& grid() const { return grid_; }
  const CellOperatorData& data() const { return data_; }

  std::uint64_t cell_apply_count() const { return cell_apply_count_.load(std::memory_order_relaxed); }
  std::uint64_t vmult_count() const { return vmult_count_.load(std::memory_order_relaxed); }
  std::uint64_t residual_count() const { return residual_count_.load(std::memory_order_relaxed); }
  void reset_counters() const {
    cell_apply_count_.store(0, std::memory_order_relaxed);
    vmult_count_.store(0, std::memory_order_relaxed);
    residual_count_.store(0, std::memory_order_relaxed);
  }

  /// Stiffness action of one cell by sum factorization: forward basis
  /// change to quadrature points, pointwise scaling of each directional
  /// gradient, transposed basis change back. in and out hold (p+1)^d
  /// values; out is overwritten.
  void cell_apply(const double* in, double* out) const { cell_apply_impl<double>(in, out); }

  /// Same kernel with a wider accumulator, for round-off-critical
  /// residual evaluations.
  void cell_apply_precise(const long double* in, long double* out) const {
    cell_apply_impl<long double>(in, out);
  }

  /// out = A u: cell loop with gather, cell_apply, scatter-add, then
  /// re-imposing the boundary constraint.
  void vmult(DofVector& out, const DofVector& u) const {
    vmult_count_.fetch_add(1, std::memory_order_relaxed);
    out.values().assign(grid_.size(), 0.0); // plain init, not data traffic
    apply_add_all_cells(out, u, 1.0);
    zero_boundary(out, grid_);
  }

  /// r = b - A u with zero boundary entries, computed in one cell sweep.
  void residual(DofVector& r, const DofVector& u, const DofVector& b) const {
    residual_count_.fetch_add(1, std::memory_order_relaxed);
    const std::size_t n = grid_.size();
    for (std::size_t i = 0; i < n; ++i)
      r.set(i, b.get(i));
    apply_add_all_cells(r, u, -1.0);
    zero_boundary(r, grid_);
  }

  /// Residual with extended-precision accumulation. The smoothers never
  /// need this, but the outer solver's stopping test does: near tight
  /// tolerances the double-precision residual evaluation floors above
  /// the target reduction.
  void residual_precise(DofVector& r, const DofVector& u, const DofVector& b) const {
    residual_count_.fetch_add(1, std::memory_order_relaxed);
    const std::size_t n = grid_.size();
    std::vector<long double> acc(n);
    for (std::size_t i = 0; i < n; ++i)
      acc[i] = b.get(i);

    const int d = grid_.dim();
    const std::size_t n_cell = cell_offsets_.size();
    long double cell_in[max_cell_tensor];
    long double cell_out[max_cell_tensor];
    Index3 c{};
    do {
      const std::size_t base = cell_base_index(c);
      for (std::size_t j = 0; j < n_cell; ++j)
        cell_in[j] = u.get(base + cell_offsets_[j]);
      cell_apply_precise(cell_in, cell_out);
      for (std::size_t j = 0; j < n_cell; ++j)
        acc[base + cell_offsets_[j]] -= cell_out[j];
    } while (next_multi_index(c, d, grid_.cells_per_dim()));

    for (std::size_t i = 0; i < n; ++i)
      r.set(i, static_cast<double>(acc[i]));
    zero_boundary(r, grid_);
  }

  /// Local residual of one patch: gathers the patch closure of u, applies
  /// the cell operator on each of the 2^d cells, accumulates in closure
  /// layout and returns b_j minus the interior portion. Partial values on
  /// the patch boundary are discarded. out holds (2p-1)^d values.
  void patch_residual(const PatchIndexSets& sets, const DofVector& u, const DofVector& b,
                      double* out) const {
    double ubar[max_patch_closure];
    double acc[max_patch_closure];
    double cell_in[max_cell_tensor];
    double cell_out[max_cell_tensor];

    const std::size_t n_closure = sets.closure_size();
    gather(u, sets.closure, ubar);
    for (std::size_t i = 0; i < n_closure; ++i)
      acc[i] = 0.0;

    for (const PatchIndexSets::CellMap& cell : sets.cells) {
      const std::size_t n_cell = cell.closure_pos.size();
      for (std::size_t i = 0; i < n_cell; ++i)
        cell_in[i] = ubar[cell.closure_pos[i]];
      cell_apply(cell_in, cell_out);
      for (std::size_t i = 0; i < n_cell; ++i)
        acc[cell.closure_pos[i]] += cell_out[i];
    }

    const std::size_t n_interior = sets.interior_size();
    for (std::size_t i = 0; i < n_interior; ++i)
      out[i] = b.get(sets.interior[i]) - acc[sets.interior_in_closure[i]];
  }

  /// Right-hand side for a constant source: cell-wise quadrature of
  /// f * phi_a, assembled and constrained.
  DofVector assemble_rhs(double f) const {
    const int p = grid_.degree();
    const int d = grid_.dim();
    const Quadrature1D quad = gauss_quadrature(p + 1);
    const ShapeData1D& shape = data_.shape;

    std::vector<double> load_1d(p + 1, 0.0);
    for (int bidx = 0; bidx <= p; ++bidx) {
      double s = 0.0;
      for (int q = 0; q < data_.n_q; ++q)
        s += quad.weights[q] * shape.value(bidx, q);
      load_1d[bidx] = s * grid_.cell_size();
    }

    std::vector<double> cell_load(cell_offsets_.size());
    Index3 t{};
    std::size_t i = 0;
    do {
      double v = f;
      for (int k = 0; k < d; ++k)
        v *= load_1d[t[k]];
      cell_load[i++] = v;
    } while (next_multi_index(t, d, p + 1));

    DofVector rhs(grid_.size());
    const int n_cells_1d = grid_.cells_per_dim();
    Index3 c{};
    do {
      const std::size_t base = cell_base_index(c);
      for (std::size_t j = 0; j < cell_offsets_.size(); ++j)
        rhs.add(base + cell_offsets_[j], cell_load[j]);
    } while (next_multi_index(c, d, n_cells_1d));
    zero_boundary(rhs, grid_);
    return rhs;
  }

private:
  template <typename T>
  void cell_apply_impl(const T* in, T* out) const {
    cell_apply_count_.fetch_add(1, std::memory_order_relaxed);
    const int d = data_.dim;
    const int p = data_.degree;
    const int nq = data_.n_q;
    const std::size_t n_cell = cell_offsets_.size();

    const double* values = data_.shape.values.data();
    const double* gradients = data_.shape.gradients.data();

    T buf_a[max_cell_tensor];
    T buf_b[max_cell_tensor];

    for (std::size_t i = 0; i < n_cell; ++i)
      out[i] = 0;

    for (int dir = 0; dir < d; ++dir) {
      // forward: shape rows are (p+1) x n_q, so the transposed product
      // maps coefficients to point values
      const T* src = in;
      T* dst = buf_a;
      Index3 ext{};
      for (int k = 0; k < d; ++k)
        ext[k] = p + 1;
      for (int k = 0; k < d; ++k) {
        const double* table = (k == dir) ? gradients : values;
        detail::apply_matrix_1d(table, nq, p + 1, d, ext, k, /*transpose=*/true, src, dst);
        ext[k] = nq;
        src = dst;
        dst = (dst == buf_a) ? buf_b : buf_a;
      }
      T* quad_vals = const_cast<T*>(src); // src is a scratch buffer here
      const std::size_t n_quad = ipow(nq, d);
      for (std::size_t q = 0; q < n_quad; ++q)
        quad_vals[q] *= data_.quad_factor[q];

      // backward: multiply by the tables themselves (test against trial)
      for (int k = 0; k < d; ++k) {
        const double* table = (k == dir) ? gradients : values;
        detail::apply_matrix_1d(table, p + 1, nq, d, ext, k, /*transpose=*/false, src, dst);
        ext[k] = p + 1;
        src = dst;
        dst = (dst == buf_a) ? buf_b : buf_a;
      }
      for (std::size_t i = 0; i < n_cell; ++i)
        out[i] += src[i];
    }

    if (testing::cell_apply_sign_flip.load(std::memory_order_relaxed))
      for (std::size_t i = 0; i < n_cell; ++i)
        out[i] = -out[i];
  }

  std::size_t cell_base_index(const Index3& c) const {
    const int p = grid_.degree();
    const std::size_t n1 = grid_.nodes_per_dim();
    std::size_t base = 0;
    for (int k = grid_.dim(); k-- > 0;)
      base = base * n1 + static_cast<std::size_t>(p * c[k]);
    return base;
  }

  void apply_add_all_cells(DofVector& out, const DofVector& u, double sign) const {
    const int d = grid_.dim();
    const int n_cells_1d = grid_.cells_per_dim();
    double cell_in[max_cell_tensor];
    double cell_out[max_cell_tensor];
    const std::size_t n_cell = cell_offsets_.size();

    Index3 c{};
    do {
      const std::size_t base = cell_base_index(c);
      for (std::size_t j = 0; j < n_cell; ++j)
        cell_in[j] = u.get(base + cell_offsets_[j]);
      cell_apply(cell_in, cell_out);
      for (std::size_t j = 0; j < n_cell; ++j)
        out.add(base + cell_offsets_[j], sign * cell_out[j]);
    } while (next_multi_index(c, d, n_cells_1d));
  }

  DofGrid grid_;
  CellOperatorData data_;
  std::vector<std::size_t> cell_offsets_;
  mutable std::atomic<std::uint64_t> cell_apply_count_{0};
  mutable std::atomic<std::uint64_t> vmult_count_{0};
  mutable std::atomic<std::uint64_t> residual_count_{0};
};

} // namespace vpmg
