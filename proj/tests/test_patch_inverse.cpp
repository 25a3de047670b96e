#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "vpmg/dense_oracle.hpp"
#include "vpmg/patch_inverse.hpp"

using vpmg::apply_fdm;
using vpmg::build_fdm;
using vpmg::dense_patch_matrix;
using vpmg::DenseMatrix;
using vpmg::FdmDecomposition;

TEST_CASE("bilinear patch decomposition by hand") {
  const FdmDecomposition fdm = build_fdm(1, 0.5, 2);
  REQUIRE(fdm.interior_size() == 1);
  CHECK_THAT(1.0 / fdm.inverse_eigenvalue_sums[0], Catch::Matchers::WithinAbs(24.0, 1e-9));

  double r = 1.0, d = 0.0;
  apply_fdm(fdm, &r, &d);
  CHECK_THAT(d, Catch::Matchers::WithinAbs(0.375, 1e-12)); // dense inverse of 8/3
}

TEST_CASE("eigenvalues are ascending and positive") {
  const FdmDecomposition fdm = build_fdm(2, 0.25, 2);
  REQUIRE(fdm.eigenvalues.size() == 3);
  for (std::size_t i = 0; i < fdm.eigenvalues.size(); ++i) {
    CHECK(fdm.eigenvalues[i] > 0.0);
    if (i > 0)
      CHECK(fdm.eigenvalues[i] > fdm.eigenvalues[i - 1]);
  }
}

TEST_CASE("construction is deterministic") {
  const FdmDecomposition a = build_fdm(3, 0.125, 3);
  const FdmDecomposition b = build_fdm(3, 0.125, 3);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.inverse_eigenvalue_sums == b.inverse_eigenvalue_sums);
}

TEST_CASE("zero in, zero out") {
  const FdmDecomposition fdm = build_fdm(3, 0.5, 2);
  std::vector<double> r(fdm.interior_size(), 0.0), d(fdm.interior_size(), 1.0);
  apply_fdm(fdm, r.data(), d.data());
  for (double x : d)
    CHECK(x == 0.0);
}

TEST_CASE("inverts the dense patch matrix") {
  std::uint64_t state = 21;
  for (int dim : {2, 3}) {
    for (int p = 1; p <= 5; ++p) {
      const double h = 1.0 / 8.0;
      const FdmDecomposition fdm = build_fdm(p, h, dim);
      const DenseMatrix aj = dense_patch_matrix(p, h, dim);
      const std::size_t n = fdm.interior_size();
      REQUIRE(aj.rows() == n);

      std::vector<double> x(n), back(n);
      for (double& v : x)
        v = vpmg::detail::unit_random(state);
      const std::vector<double> ax = aj.apply(x);
      apply_fdm(fdm, ax.data(), back.data());

      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += (back[i] - x[i]) * (back[i] - x[i]);
        den += x[i] * x[i];
      }
      INFO("dim=" << dim << " p=" << p);
      CHECK(std::sqrt(num / den) < 1e-10);
    }
  }
}

TEST_CASE("application is symmetric") {
  std::uint64_t state = 77;
  const FdmDecomposition fdm = build_fdm(4, 0.25, 2);
  const std::size_t n = fdm.interior_size();
  std::vector<double> r(n), s(n), fr(n), fs(n);
  for (double& v : r)
    v = vpmg::detail::unit_random(state);
  for (double& v : s)
    v = vpmg::detail::unit_random(state);
  apply_fdm(fdm, r.data(), fr.data());
  apply_fdm(fdm, s.data(), fs.data());
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lhs += fr[i] * s[i];
    rhs += r[i] * fs[i];
  }
  CHECK(std::abs(lhs - rhs) < 1e-11 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("cross-module inverse check") {
  // dense_patch_matrix * apply_fdm(r) = r
  std::uint64_t state = 101;
  const int p = 3, dim = 2;
  const double h = 0.25;
  const FdmDecomposition fdm = build_fdm(p, h, dim);
  const DenseMatrix aj = dense_patch_matrix(p, h, dim);
  const std::size_t n = fdm.interior_size();
  std::vector<double> r(n), d(n);
  for (double& v : r)
    v = vpmg::detail::unit_random(state);
  apply_fdm(fdm, r.data(), d.data());
  const std::vector<double> ad = aj.apply(d);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(ad[i] - r[i]) < 1e-10);
}
