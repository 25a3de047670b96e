#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/mesh_hierarchy.hpp"
#include "vpmg/trace.hpp"

namespace vpmg {

/// Number of scalar degrees of freedom of a degree-p discretization on
/// level l, boundary nodes included: (p * 2^(l+1) + 1)^d.
inline std::size_t n_dofs(int dim, int degree, int level) {
  check_dim(dim);
  check_degree(degree);
  if (level < 0)
    throw std::invalid_argument("n_dofs: level must be non-negative");
  const std::size_t per_dim = static_cast<std::size_t>(degree) * (std::size_t{1} << (level + 1)) + 1;
  return ipow(per_dim, dim);
}

/// Lexicographic node numbering of one level, x fastest. Nodes with any
/// coordinate on the domain boundary carry the homogeneous Dirichlet
/// constraint.
class DofGrid {
public:
  DofGrid(int dim, int degree, int level) : dim_(dim), degree_(degree), level_(level) {
    check_dim(dim);
    check_degree(degree);
    if (level < 0)
      throw std::invalid_argument("DofGrid: level must be non-negative");
    cells_per_dim_ = 1 << (level + 1);
    nodes_per_dim_ = degree * cells_per_dim_ + 1;
    n_dofs_ = ipow(static_cast<std::size_t>(nodes_per_dim_), dim);
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int level() const { return level_; }
  int cells_per_dim() const { return cells_per_dim_; }
  int nodes_per_dim() const { return nodes_per_dim_; }
  std::size_t size() const { return n_dofs_; }
  double cell_size() const { return 1.0 / cells_per_dim_; }

  std::size_t node_index(const Index3& c) const {
    std::size_t idx = 0;
    for (int k = dim_; k-- > 0;)
      idx = idx * nodes_per_dim_ + static_cast<std::size_t>(c[k]);
    return idx;
  }

  bool on_boundary(const Index3& c) const {
    for (int k = 0; k < dim_; ++k)
      if (c[k] == 0 || c[k] == nodes_per_dim_ - 1)
        return true;
    return false;
  }

  std::size_t n_interior_dofs() const {
    return ipow(static_cast<std::size_t>(nodes_per_dim_ - 2), dim_);
  }

private:
  int dim_, degree_, level_;
  int cells_per_dim_, nodes_per_dim_;
  std::size_t n_dofs_;
};

/// Coefficient vector of one level. All element access funnels through
/// get/set/add so a bound AccessTrace sees the exact access stream; the
/// binding is intentionally not copied with the values.
class DofVector {
public:
  DofVector() = default;
  explicit DofVector(std::size_t n) : data_(n, 0.0) {}

  DofVector(const DofVector& other) : data_(other.data_) {}
  DofVector& operator=(const DofVector& other) {
    data_ = other.data_;
    return *this;
  }
  DofVector(DofVector&&) = default;
  DofVector& operator=(DofVector&&) = default;

  std::size_t size() const { return data_.size(); }

  void bind_trace(AccessTrace* trace, std::uint8_t array_id) {
    trace_ = trace;
    array_id_ = array_id;
  }

  double get(std::size_t i) const {
    assert(i < data_.size());
    if (trace_)
      trace_->append(array_id_, i, AccessKind::read);
    return data_[i];
  }

  void set(std::size_t i, double v) {
    assert(i < data_.size());
    if (trace_)
      trace_->append(array_id_, i, AccessKind::write);
    data_[i] = v;
  }

  void add(std::size_t i, double v) {
    assert(i < data_.size());
    if (trace_)
      trace_->append(array_id_, i, AccessKind::write);
    data_[i] += v;
  }

  /// Untraced access for tests and oracles.
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

private:
  std::vector<double> data_;
  AccessTrace* trace_ = nullptr;
  std::uint8_t array_id_ = 0;
};

inline double dot(const DofVector& a, const DofVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a.get(i) * b.get(i);
  return s;
}

inline double norm_l2(const DofVector& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const DofVector& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.get(i)));
  return m;
}

/// Deterministic pseudo-random interior values, boundary kept zero.
inline void randomize_interior(DofVector& v, const DofGrid& grid, std::uint64_t seed) {
  std::uint64_t state = seed | 1;
  Index3 c{};
  do {
    if (!grid.on_boundary(c))
      v.values()[grid.node_index(c)] = detail::unit_random(state);
  } while (next_multi_index(c, grid.dim(), grid.nodes_per_dim()));
}

inline void zero_boundary(DofVector& v, const DofGrid& grid) {
  const int n = grid.nodes_per_dim();
  Index3 c{};
  do {
    if (grid.on_boundary(c))
      v.set(grid.node_index(c), 0.0);
  } while (next_multi_index(c, grid.dim(), n));
}

/// Index sets of one vertex patch. closure covers all nodes of the 2^d
/// patch cells in lexicographic patch order; interior drops the outermost
/// node layer. Per cell, write_mask marks the lexicographically smallest
/// cell containing each node as its unique owner.
struct PatchIndexSets {
  int dim = 0;
  int degree = 0;

  std::vector<std::size_t> closure;  // (2p+1)^d global indices
  std::vector<std::size_t> interior; // (2p-1)^d global indices

  /// closure positions of the interior nodes, in interior order
  std::vector<std::uint32_t> interior_in_closure;
  /// interiorness flag per closure position
  std::vector<std::uint8_t> closure_is_interior;

  struct CellMap {
    std::vector<std::size_t> dofs;          // (p+1)^d global indices
    std::vector<std::uint32_t> closure_pos; // position of each cell node in closure
    std::vector<std::uint8_t> write_mask;   // ownership flags
  };
  std::vector<CellMap> cells; // 2^d, lexicographic cell order

  std::size_t closure_size() const { return closure.size(); }
  std::size_t interior_size() const { return interior.size(); }
};

inline PatchIndexSets patch_index_sets(const DofGrid& grid, const PatchId& patch) {
  const int d = grid.dim();
  const int p = grid.degree();
  const int n_closure_1d = 2 * p + 1;
  const int n_interior_1d = 2 * p - 1;

  PatchIndexSets sets;
  sets.dim = d;
  sets.degree = p;

  // base node coordinate of the patch per dimension: p*(v-1)
  Index3 base{};
  for (int k = 0; k < d; ++k) {
    if (patch.vertex[k] < 1 || patch.vertex[k] >= grid.cells_per_dim())
      throw std::invalid_argument("patch vertex is not an interior vertex of the level");
    base[k] = p * (patch.vertex[k] - 1);
  }

  sets.closure.reserve(ipow(n_closure_1d, d));
  sets.closure_is_interior.reserve(ipow(n_closure_1d, d));
  Index3 t{};
  do {
    Index3 node = base;
    bool is_interior = true;
    for (int k = 0; k < d; ++k) {
      node[k] += t[k];
      if (t[k] == 0 || t[k] == n_closure_1d - 1)
        is_interior = false;
    }
    sets.closure.push_back(grid.node_index(node));
    sets.closure_is_interior.push_back(is_interior ? 1 : 0);
  } while (next_multi_index(t, d, n_closure_1d));

  sets.interior.reserve(ipow(n_interior_1d, d));
  sets.interior_in_closure.reserve(ipow(n_interior_1d, d));
  t = Index3{};
  do {
    std::uint32_t pos = 0;
    for (int k = d; k-- > 0;)
      pos = pos * n_closure_1d + static_cast<std::uint32_t>(t[k] + 1);
    sets.interior_in_closure.push_back(pos);
    sets.interior.push_back(sets.closure[pos]);
  } while (next_multi_index(t, d, n_interior_1d));

  // per-cell maps; cell e in {0,1}^d, x fastest
  const int n_cell_1d = p + 1;
  sets.cells.resize(std::size_t{1} << d);
  Index3 e{};
  std::size_t cell_rank = 0;
  do {
    PatchIndexSets::CellMap& cell = sets.cells[cell_rank++];
    const std::size_t n_cell = ipow(n_cell_1d, d);
    cell.dofs.reserve(n_cell);
    cell.closure_pos.reserve(n_cell);
    cell.write_mask.reserve(n_cell);
    Index3 g{};
    do {
      std::uint32_t pos = 0;
      bool owned = true;
      for (int k = d; k-- > 0;) {
        pos = pos * n_closure_1d + static_cast<std::uint32_t>(e[k] * p + g[k]);
        if (e[k] == 1 && g[k] == 0)
          owned = false; // shared with the lexicographically smaller cell
      }
      cell.closure_pos.push_back(pos);
      cell.dofs.push_back(sets.closure[pos]);
      cell.write_mask.push_back(owned ? 1 : 0);
    } while (next_multi_index(g, d, n_cell_1d));
  } while (next_multi_index(e, d, 2));

  return sets;
}

inline void gather(const DofVector& v, std::span<const std::size_t> indices, double* out) {
  for (std::size_t i = 0; i < indices.size(); ++i)
    out[i] = v.get(indices[i]);
}

/// Adds a closure-layout local array into the global vector cell by cell.
/// Only patch-interior nodes are written (partial values on the patch
/// boundary are dropped) and the ownership mask writes each shared node
/// exactly once.
inline void scatter_add_masked(DofVector& v, const PatchIndexSets& sets,
                               std::span<const double> closure_values) {
  for (const PatchIndexSets::CellMap& cell : sets.cells) {
    const std::size_t n = cell.dofs.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!cell.write_mask[i])
        continue;
      const std::uint32_t pos = cell.closure_pos[i];
      if (!sets.closure_is_interior[pos])
        continue;
      v.add(cell.dofs[i], closure_values[pos]);
    }
  }
}

} // namespace vpmg
