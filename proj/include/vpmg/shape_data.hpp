#pragma once

#include <cmath>
#include <vector>

#include "vpmg/common.hpp"
#include "vpmg/quadrature.hpp"

namespace vpmg {

/// Lagrange basis on a set of distinct nodes in [0,1], evaluated with the
/// barycentric formula. Evaluation at a node returns the exact Kronecker
/// delta, which keeps embedding matrices exact at shared points.
class LagrangeBasis1D {
public:
  explicit LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    const int n = static_cast<int>(nodes_.size());
    bary_.assign(n, 1.0);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        if (a != b)
          bary_[b] /= (nodes_[b] - nodes_[a]);
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }

  double value(int b, double x) const {
    const int n = size();
    for (int a = 0; a < n; ++a)
      if (x == nodes_[a])
        return a == b ? 1.0 : 0.0;
    double num = bary_[b] / (x - nodes_[b]);
    double den = 0.0;
    for (int a = 0; a < n; ++a)
      den += bary_[a] / (x - nodes_[a]);
    return num / den;
  }

  double derivative(int b, double x) const {
    const int n = size();
    for (int c = 0; c < n; ++c) {
      if (x == nodes_[c]) {
        if (b != c)
          return (bary_[b] / bary_[c]) / (nodes_[c] - nodes_[b]);
        double sum = 0.0;
        for (int a = 0; a < n; ++a)
          if (a != c)
            sum += (bary_[a] / bary_[c]) / (nodes_[c] - nodes_[a]);
        return -sum;
      }
    }
    // l_b'(x) = l_b(x) * sum_{a != b} 1/(x - x_a)
    double sum = 0.0;
    for (int a = 0; a < n; ++a)
      if (a != b)
        sum += 1.0 / (x - nodes_[a]);
    return value(b, x) * sum;
  }

private:
  std::vector<double> nodes_;
  std::vector<double> bary_;
};

/// Degree-p Lagrange shape functions on Gauss-Lobatto support points,
/// tabulated at the points of a quadrature rule. values and gradients are
/// row-major (p+1) x n_q.
struct ShapeData1D {
  int degree = 0;
  std::vector<double> support_points;
  std::vector<double> values;
  std::vector<double> gradients;

  int n_q() const { return degree > 0 ? static_cast<int>(values.size()) / (degree + 1) : 0; }

  double value(int b, int q) const { return values[b * n_q() + q]; }
  double gradient(int b, int q) const { return gradients[b * n_q() + q]; }
};

inline ShapeData1D shape_data_1d(int degree, const Quadrature1D& quad) {
  check_degree(degree);
  ShapeData1D data;
  data.degree = degree;
  data.support_points = gauss_lobatto_points(degree);
  const LagrangeBasis1D basis(data.support_points);

  const int nq = quad.size();
  data.values.resize((degree + 1) * nq);
  data.gradients.resize((degree + 1) * nq);
  for (int b = 0; b <= degree; ++b) {
    for (int q = 0; q < nq; ++q) {
      data.values[b * nq + q] = basis.value(b, quad.points[q]);
      data.gradients[b * nq + q] = basis.derivative(b, quad.points[q]);
    }
  }
  return data;
}

} // namespace vpmg
