#pragma once

#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/reference_element.hpp"
#include "vpmg/tensor_kernels.hpp"

namespace vpmg {

/// Inverse of the patch-interior Laplace operator, diagonalized per
/// direction. On the uniform Cartesian mesh every direction shares the
/// same eigenpairs and all patches of a level share one decomposition.
struct FdmDecomposition {
  int dim = 0;
  int degree = 0;
  int m = 0; // interior size per direction, 2p-1
  DenseMatrix eigenvectors;        // m x m, columns M-orthonormal
  std::vector<double> eigenvalues; // ascending, all positive
  std::vector<double> inverse_eigenvalue_sums; // m^d reciprocals of sum_i lambda_i

  std::size_t interior_size() const { return ipow(m, dim); }
};

inline FdmDecomposition build_fdm(int degree, double cell_size, int dim) {
  check_dim(dim);
  const PatchMatrices1D patch = patch_matrices_1d(degree, cell_size);
  const GeneralizedEigenPairs pairs =
      generalized_eigendecomposition(patch.stiffness, patch.mass);

  FdmDecomposition fdm;
  fdm.dim = dim;
  fdm.degree = degree;
  fdm.m = 2 * degree - 1;
  fdm.eigenvectors = pairs.eigenvectors;
  fdm.eigenvalues = pairs.eigenvalues;

  fdm.inverse_eigenvalue_sums.resize(ipow(fdm.m, dim));
  Index3 k{};
  std::size_t i = 0;
  do {
    double s = 0.0;
    for (int d = 0; d < dim; ++d)
      s += fdm.eigenvalues[k[d]];
    fdm.inverse_eigenvalue_sums[i++] = 1.0 / s;
  } while (next_multi_index(k, dim, fdm.m));
  return fdm;
}

/// d = (kron T) diag(1/sum lambda) (kron T^T) r, each factor applied
/// direction by direction. r and out hold (2p-1)^d values.
inline void apply_fdm(const FdmDecomposition& fdm, const double* r, double* out) {
  const int d = fdm.dim;
  const int m = fdm.m;
  const double* t = fdm.eigenvectors.data(); // row-major m x m

  double buf_a[max_patch_closure];
  double buf_b[max_patch_closure];

  Index3 ext{};
  for (int k = 0; k < d; ++k)
    ext[k] = m;

  // transform into the eigenbasis: T^T along every direction
  const double* src = r;
  double* dst = buf_a;
  for (int k = 0; k < d; ++k) {
    detail::apply_matrix_1d(t, m, m, d, ext, k, /*transpose=*/true, src, dst);
    src = dst;
    dst = (dst == buf_a) ? buf_b : buf_a;
  }

  const std::size_t n = fdm.interior_size();
  double* mid = const_cast<double*>(src); // src is one of the buffers here
  for (std::size_t i = 0; i < n; ++i)
    mid[i] *= fdm.inverse_eigenvalue_sums[i];

  for (int k = 0; k < d; ++k) {
    double* target = (k == d - 1) ? out : dst;
    detail::apply_matrix_1d(t, m, m, d, ext, k, /*transpose=*/false, src, target);
    src = target;
    dst = (dst == buf_a) ? buf_b : buf_a;
  }
}

} // namespace vpmg
