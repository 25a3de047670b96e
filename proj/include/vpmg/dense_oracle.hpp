#pragma once

#include <stdexcept>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/dense_matrix.hpp"
#include "vpmg/dof_map.hpp"
#include "vpmg/reference_element.hpp"

namespace vpmg {

/// Brute-force reference assembly of the constrained level matrix from
/// explicit Kronecker sums of the 1D cell matrices. Deliberately shares
/// no code with the sum-factorized operator so agreement between the two
/// is a genuine cross-check.
inline DenseMatrix assemble_dense(int dim, int degree, int level,
                                  std::size_t max_interior_dofs = 20'000) {
  const DofGrid grid(dim, degree, level);
  const std::size_t n_int = grid.n_interior_dofs();
  if (n_int > max_interior_dofs)
    throw resource_error("assemble_dense: " + std::to_string(n_int) +
                         " interior DoFs exceed the cap of " + std::to_string(max_interior_dofs));

  const CellMatrices1D mats = cell_matrices_1d(degree, grid.cell_size());

  // cell matrix: sum over directions of kron(..., K at position i, ...)
  const int d = dim;
  DenseMatrix cell;
  for (int i = 0; i < d; ++i) {
    // build kron from slowest (last) dimension to fastest
    DenseMatrix acc = (d - 1 == i) ? mats.stiffness : mats.mass;
    for (int k = d - 2; k >= 0; --k)
      acc = kron(acc, k == i ? mats.stiffness : mats.mass);
    if (i == 0)
      cell = acc;
    else {
      for (std::size_t r = 0; r < cell.rows(); ++r)
        for (std::size_t cidx = 0; cidx < cell.cols(); ++cidx)
          cell(r, cidx) += acc(r, cidx);
    }
  }

  const int p = degree;
  const int n1 = grid.nodes_per_dim();
  const int interior_1d = n1 - 2;

  auto interior_index = [&](const Index3& node) -> std::ptrdiff_t {
    std::size_t idx = 0;
    for (int k = d; k-- > 0;) {
      if (node[k] <= 0 || node[k] >= n1 - 1)
        return -1;
      idx = idx * interior_1d + static_cast<std::size_t>(node[k] - 1);
    }
    return static_cast<std::ptrdiff_t>(idx);
  };

  // node coordinates of the cell-local lexicographic enumeration
  std::vector<Index3> local_nodes;
  Index3 t{};
  do {
    local_nodes.push_back(t);
  } while (next_multi_index(t, d, p + 1));

  DenseMatrix a(n_int, n_int);
  Index3 c{};
  do {
    for (std::size_t la = 0; la < local_nodes.size(); ++la) {
      Index3 na{};
      for (int k = 0; k < d; ++k)
        na[k] = p * c[k] + local_nodes[la][k];
      const std::ptrdiff_t ga = interior_index(na);
      if (ga < 0)
        continue;
      for (std::size_t lb = 0; lb < local_nodes.size(); ++lb) {
        Index3 nb{};
        for (int k = 0; k < d; ++k)
          nb[k] = p * c[k] + local_nodes[lb][k];
        const std::ptrdiff_t gb = interior_index(nb);
        if (gb < 0)
          continue;
        a(ga, gb) += cell(la, lb);
      }
    }
  } while (next_multi_index(c, d, grid.cells_per_dim()));

  return a;
}

/// Dense interior matrix of one vertex patch as an explicit Kronecker sum
/// of the 1D patch matrices.
inline DenseMatrix dense_patch_matrix(int degree, double cell_size, int dim) {
  check_dim(dim);
  const PatchMatrices1D patch = patch_matrices_1d(degree, cell_size);
  DenseMatrix out;
  for (int i = 0; i < dim; ++i) {
    DenseMatrix acc = (dim - 1 == i) ? patch.stiffness : patch.mass;
    for (int k = dim - 2; k >= 0; --k)
      acc = kron(acc, k == i ? patch.stiffness : patch.mass);
    if (i == 0)
      out = acc;
    else
      for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
          out(r, c) += acc(r, c);
  }
  return out;
}

/// Direct SPD solve by Cholesky factorization.
inline std::vector<double> direct_solve(const DenseMatrix& a, std::vector<double> rhs) {
  if (a.rows() != a.cols() || a.rows() != rhs.size())
    throw std::invalid_argument("direct_solve: shape mismatch");
  const DenseMatrix l = cholesky_factor(a);
  cholesky_solve_in_place(l, rhs);
  return rhs;
}

/// Interior restriction of a full level vector, interior-lexicographic
/// order (the ordering assemble_dense uses).
inline std::vector<double> restrict_to_interior(const DofGrid& grid, const DofVector& v) {
  std::vector<double> out;
  out.reserve(grid.n_interior_dofs());
  const int n1 = grid.nodes_per_dim();
  Index3 c{};
  for (int k = 0; k < grid.dim(); ++k)
    c[k] = 1;
  while (true) {
    out.push_back(v.values()[grid.node_index(c)]);
    int k = 0;
    for (; k < grid.dim(); ++k) {
      if (++c[k] <= n1 - 2)
        break;
      c[k] = 1;
    }
    if (k == grid.dim())
      break;
  }
  return out;
}

inline void inject_interior(const DofGrid& grid, const std::vector<double>& interior,
                            DofVector& v) {
  const int n1 = grid.nodes_per_dim();
  std::size_t i = 0;
  Index3 c{};
  for (int k = 0; k < grid.dim(); ++k)
    c[k] = 1;
  while (true) {
    v.values()[grid.node_index(c)] = interior[i++];
    int k = 0;
    for (; k < grid.dim(); ++k) {
      if (++c[k] <= n1 - 2)
        break;
      c[k] = 1;
    }
    if (k == grid.dim())
      break;
  }
}

} // namespace vpmg
