#pragma once

#include <cstddef>

#include "vpmg/common.hpp"

namespace vpmg {

// Largest tensor handled on the stack by the patch kernels: a patch
// closure at the degree cap, (2*max_degree+1)^max_dim entries.
inline constexpr std::size_t max_patch_closure = ipow(2 * max_degree + 1, max_dim);
inline constexpr std::size_t max_cell_tensor = ipow(max_degree + 2, max_dim);

namespace detail {

/// Contracts a row-major matrix a (n_out x n_in) with dimension k of a
/// tensor stored x-fastest with extents ext[0..dim). When transpose is
/// set, a is applied as a^T (n_in x n_out input rows). in and out must
/// not alias. The accumulator type T may be wider than double for
/// round-off-critical paths.
template <typename T>
inline void apply_matrix_1d(const double* a, int n_out, int n_in, int dim, const Index3& ext,
                            int k, bool transpose, const T* in, T* out) {
  std::size_t inner = 1;
  for (int m = 0; m < k; ++m)
    inner *= static_cast<std::size_t>(ext[m]);
  std::size_t outer = 1;
  for (int m = k + 1; m < dim; ++m)
    outer *= static_cast<std::size_t>(ext[m]);

  if (inner == 1) {
    // contiguous contraction along the fastest dimension
    for (std::size_t o = 0; o < outer; ++o) {
      const T* in_o = in + o * n_in;
      T* out_o = out + o * n_out;
      for (int j = 0; j < n_out; ++j) {
        T acc = 0;
        for (int i = 0; i < n_in; ++i)
          acc += (transpose ? a[i * n_out + j] : a[j * n_in + i]) * in_o[i];
        out_o[j] = acc;
      }
    }
    return;
  }

  for (std::size_t o = 0; o < outer; ++o) {
    const T* in_o = in + o * inner * n_in;
    T* out_o = out + o * inner * n_out;
    for (int j = 0; j < n_out; ++j) {
      T* dst = out_o + j * inner;
      for (std::size_t s = 0; s < inner; ++s)
        dst[s] = 0;
      for (int i = 0; i < n_in; ++i) {
        const double c = transpose ? a[i * n_out + j] : a[j * n_in + i];
        const T* src = in_o + i * inner;
        for (std::size_t s = 0; s < inner; ++s)
          dst[s] += c * src[s];
      }
    }
  }
}

} // namespace detail
} // namespace vpmg
