#pragma once
#include <cstddef>
#include <vector>

namespace fgibbs {

struct GaussNodes {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// Gauss-Legendre nodes and weights (cached per order).
const GaussNodes& gauss_legendre(int order);

/// integral of f over [a, b] with one Gauss panel of the given order.
template <typename F>
double gauss_panel(F&& f, double a, double b, int order) {
  const GaussNodes& gn = gauss_legendre(order);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0;
  for (std::size_t i = 0; i < gn.x.size(); ++i) acc += gn.w[i] * f(mid + half * gn.x[i]);
  return acc * half;
}

}  // namespace fgibbs
