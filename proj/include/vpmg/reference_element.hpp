#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/dense_matrix.hpp"
#include "vpmg/quadrature.hpp"
#include "vpmg/shape_data.hpp"

namespace vpmg {

/// 1D mass and stiffness matrices on a single cell of size h,
/// size (p+1) x (p+1).
struct CellMatrices1D {
  DenseMatrix mass;
  DenseMatrix stiffness;
};

/// 1D mass and stiffness matrices of a two-cell vertex patch restricted to
/// its interior, size (2p-1) x (2p-1).
struct PatchMatrices1D {
  int degree = 0;
  double cell_size = 0.0;
  DenseMatrix mass;
  DenseMatrix stiffness;
};

/// Eigenpairs of the pencil K T = M T diag(lambda) with T^T M T = I and
/// eigenvalues in ascending order.
struct GeneralizedEigenPairs {
  DenseMatrix eigenvectors;
  std::vector<double> eigenvalues;
};

inline CellMatrices1D cell_matrices_1d(int degree, double h) {
  check_degree(degree);
  if (!(h > 0.0))
    throw std::invalid_argument("cell_matrices_1d: cell size must be positive");

  // p+1 Gauss points integrate both the mass (degree 2p) and the
  // stiffness (degree 2p-2) integrands exactly.
  const Quadrature1D quad = gauss_quadrature(degree + 1);
  const ShapeData1D shape = shape_data_1d(degree, quad);
  const int n = degree + 1;
  const int nq = quad.size();

  CellMatrices1D out{DenseMatrix(n, n), DenseMatrix(n, n)};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double m = 0.0, k = 0.0;
      for (int q = 0; q < nq; ++q) {
        // products first: a*b == b*a bitwise, which keeps the matrices
        // exactly symmetric
        m += (shape.value(a, q) * shape.value(b, q)) * quad.weights[q];
        k += (shape.gradient(a, q) * shape.gradient(b, q)) * quad.weights[q];
      }
      out.mass(a, b) = m * h;     // dx = h d(xref)
      out.stiffness(a, b) = k / h; // two gradients pick up 1/h each
    }
  }
  return out;
}

/// Assembles two adjacent cells of size h sharing the patch vertex and
/// eliminates the two outer boundary nodes.
inline PatchMatrices1D patch_matrices_1d(int degree, double h) {
  const CellMatrices1D cell = cell_matrices_1d(degree, h);
  const int p = degree;
  const int n_patch = 2 * p + 1;
  DenseMatrix mass(n_patch, n_patch), stiffness(n_patch, n_patch);
  for (int c = 0; c < 2; ++c) {
    const int offset = c * p;
    for (int a = 0; a <= p; ++a)
      for (int b = 0; b <= p; ++b) {
        mass(offset + a, offset + b) += cell.mass(a, b);
        stiffness(offset + a, offset + b) += cell.stiffness(a, b);
      }
  }

  PatchMatrices1D out;
  out.degree = p;
  out.cell_size = h;
  const int m = 2 * p - 1;
  out.mass = DenseMatrix(m, m);
  out.stiffness = DenseMatrix(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      out.mass(a, b) = mass(a + 1, b + 1);
      out.stiffness(a, b) = stiffness(a + 1, b + 1);
    }
  return out;
}

/// Solves K T = M T diag(lambda) for symmetric K and SPD M by reducing to
/// a standard symmetric problem via the Cholesky factor of M, then cyclic
/// Jacobi iteration. Each eigenvector column is sign-normalized so its
/// largest-magnitude entry is positive.
inline GeneralizedEigenPairs generalized_eigendecomposition(const DenseMatrix& stiffness,
                                                            const DenseMatrix& mass) {
  const std::size_t n = stiffness.rows();
  const DenseMatrix l = cholesky_factor(mass); // throws if M is not SPD

  // B = L^{-1} K L^{-T}, assembled column by column.
  DenseMatrix b(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = stiffness(i, j);
    // forward substitution: col <- L^{-1} col
    for (std::size_t i = 0; i < n; ++i) {
      double s = col[i];
      for (std::size_t k = 0; k < i; ++k)
        s -= l(i, k) * col[k];
      col[i] = s / l(i, i);
    }
    for (std::size_t i = 0; i < n; ++i)
      b(i, j) = col[i];
  }
  // right-multiply by L^{-T}: solve row-wise
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j)
      row[j] = b(i, j);
    for (std::size_t j = 0; j < n; ++j) {
      double s = row[j];
      for (std::size_t k = 0; k < j; ++k)
        s -= l(j, k) * row[k];
      row[j] = s / l(j, j);
    }
    for (std::size_t j = 0; j < n; ++j)
      b(i, j) = row[j];
  }
  // symmetrize the round-off
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = avg;
      b(j, i) = avg;
    }

  DenseMatrix y;
  std::vector<double> lambda;
  jacobi_eigen_symmetric(b, y, lambda, 1e-14);

  // T = L^{-T} Y, column by column (back substitution).
  DenseMatrix t(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = y(i, j);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = col[ii];
      for (std::size_t k = ii + 1; k < n; ++k)
        s -= l(k, ii) * col[k];
      col[ii] = s / l(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i)
      t(i, j) = col[i];
  }

  // ascending eigenvalues
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(),
            [&](std::size_t a, std::size_t c) { return lambda[a] < lambda[c]; });

  GeneralizedEigenPairs out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = lambda[perm[j]];
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::abs(t(i, perm[j]));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    const double sign = t(arg, perm[j]) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i)
      out.eigenvectors(i, j) = sign * t(i, perm[j]);
  }
  return out;
}

} // namespace vpmg
