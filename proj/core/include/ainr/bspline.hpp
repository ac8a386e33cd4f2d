#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ainr/tensor.hpp"

namespace ainr {

// Uniform knot vector over [lo, hi] split into `grid_size` intervals and
// extended by `order` intervals on each side, so the G + k basis functions of
// degree k form a partition of unity on the whole domain.
struct SplineGrid {
  std::size_t grid_size = 0;
  std::size_t order = 0;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> knots;  // grid_size + 2*order + 1 entries

  static SplineGrid make(std::size_t grid_size, std::size_t order, double lo = -1.0,
                         double hi = 1.0);

  std::size_t basis_count() const { return grid_size + order; }
  double step() const { return (hi - lo) / static_cast<double>(grid_size); }
  double clamp(double x) const;
};

// Non-zero window of the basis at one point: entries first .. first+order.
// `values` and `derivs` must hold order+1 entries; `derivs` may be empty.
// x is clamped to the domain; derivatives are zero when clamping was active.
std::size_t local_basis(const SplineGrid& grid, double x, std::span<double> values,
                        std::span<double> derivs = {});

// Dense basis vector B_0(x) .. B_{G+k-1}(x).
std::vector<double> basis(const SplineGrid& grid, double x);
// Dense dB_i/dx.
std::vector<double> basis_grad(const SplineGrid& grid, double x);

// spline(x) = sum_i coeffs[i] * B_i(x), batched over x; differentiable in
// both the coefficients and x.
Var spline_eval(const SplineGrid& grid, Var coeffs, Var x);

}  // namespace ainr
