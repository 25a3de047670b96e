#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vpmg {

inline constexpr int max_dim = 3;
inline constexpr int max_degree = 8;

/// Thrown when a matrix factorization fails, e.g. Cholesky of a matrix
/// that is not positive definite.
class decomposition_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation would exceed a configured size cap.
class resource_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i)
    r *= base;
  return r;
}

/// Multi-index with runtime dimension. Entries beyond the active
/// dimension stay zero so they drop out of linear-index arithmetic.
using Index3 = std::array<int, max_dim>;

inline void check_dim(int dim) {
  if (dim < 1 || dim > max_dim)
    throw std::invalid_argument("dim must be in [1," + std::to_string(max_dim) + "], got " +
                                std::to_string(dim));
}

inline void check_degree(int degree) {
  if (degree < 1 || degree > max_degree)
    throw std::invalid_argument("degree must be in [1," + std::to_string(max_degree) +
                                "], got " + std::to_string(degree));
}

/// Advances a multi-index through [0,extent)^dim in lexicographic order,
/// first coordinate fastest. Returns false after the last index.
inline bool next_multi_index(Index3& idx, int dim, int extent) {
  for (int k = 0; k < dim; ++k) {
    if (++idx[k] < extent)
      return true;
    idx[k] = 0;
  }
  return false;
}

inline bool next_multi_index(Index3& idx, int dim, const Index3& extents) {
  for (int k = 0; k < dim; ++k) {
    if (++idx[k] < extents[k])
      return true;
    idx[k] = 0;
  }
  return false;
}

namespace detail {

/// xorshift64* mapped to [-1, 1]; deterministic across platforms, which
/// keeps instrumented replays and benchmarks reproducible.
inline double unit_random(std::uint64_t& state) {
  state ^= state >> 12;
  state ^= state << 25;
  state ^= state >> 27;
  const std::uint64_t r = state * 0x2545F4914F6CDD1DULL;
  return 2.0 * (static_cast<double>(r >> 11) / 9007199254740992.0) - 1.0;
}

} // namespace detail

} // namespace vpmg
