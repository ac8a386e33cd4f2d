#include "ainr/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>

#include "ainr/error.hpp"

namespace ainr {

namespace {
constexpr std::size_t kMaxOrder = 31;
}

SplineGrid SplineGrid::make(std::size_t grid_size, std::size_t order, double lo, double hi) {
  if (grid_size < 1) throw ConfigError("spline grid size must be >= 1");
  if (!(lo < hi)) throw ConfigError("spline domain needs lo < hi");
  if (order > kMaxOrder) throw ConfigError("spline order above " + std::to_string(kMaxOrder));
  SplineGrid g;
  g.grid_size = grid_size;
  g.order = order;
  g.lo = lo;
  g.hi = hi;
  const double h = g.step();
  const std::size_t count = grid_size + 2 * order + 1;
  g.knots.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    g.knots[i] = lo + (static_cast<double>(i) - static_cast<double>(order)) * h;
  // Pin the domain ends so a clamped x never lies outside its knot span.
  g.knots[order] = lo;
  g.knots[order + grid_size] = hi;
  return g;
}

double SplineGrid::clamp(double x) const { return std::clamp(x, lo, hi); }

std::size_t local_basis(const SplineGrid& grid, double x, std::span<double> values,
                        std::span<double> derivs) {
  const std::size_t k = grid.order;
  const auto& t = grid.knots;
  const bool clamped = x < grid.lo || x > grid.hi;
  x = grid.clamp(x);

  // Knot span j with t_j <= x < t_{j+1}; x == hi belongs to the last interval.
  const double u = (x - grid.lo) / grid.step();
  std::size_t cell = u <= 0.0 ? 0 : static_cast<std::size_t>(u);
  cell = std::min(cell, grid.grid_size - 1);
  // The division can round across a knot; settle the span against the stored
  // knots so every left/right distance below is non-negative.
  while (cell > 0 && x < t[cell + k]) --cell;
  while (cell + 1 < grid.grid_size && x >= t[cell + k + 1]) ++cell;
  const std::size_t j = cell + k;

  // Triangular Cox-de Boor table; `prev` keeps the degree k-1 row.
  std::array<double, kMaxOrder + 1> left{}, right{}, prev{};
  values[0] = 1.0;
  for (std::size_t r = 1; r <= k; ++r) {
    if (r == k)
      std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), prev.begin());
    left[r] = x - t[j + 1 - r];
    right[r] = t[j + r] - x;
    double saved = 0.0;
    for (std::size_t s = 0; s < r; ++s) {
      const double temp = values[s] / (right[s + 1] + left[r - s]);
      values[s] = saved + right[s + 1] * temp;
      saved = left[r - s] * temp;
    }
    values[r] = saved;
  }

  if (!derivs.empty()) {
    std::fill(derivs.begin(), derivs.begin() + static_cast<std::ptrdiff_t>(k + 1), 0.0);
    if (k > 0 && !clamped) {
      // B'_{i,k} = k (B_{i,k-1}/(t_{i+k}-t_i) - B_{i+1,k-1}/(t_{i+k+1}-t_{i+1})),
      // where prev[r-1] = B_{j-k+r, k-1}.
      const std::size_t first = j - k;
      for (std::size_t r = 0; r <= k; ++r) {
        const std::size_t i = first + r;
        double d = 0.0;
        if (r >= 1) d += prev[r - 1] / (t[i + k] - t[i]);
        if (r <= k - 1) d -= prev[r] / (t[i + k + 1] - t[i + 1]);
        derivs[r] = static_cast<double>(k) * d;
      }
    }
  }
  return j - k;
}

std::vector<double> basis(const SplineGrid& grid, double x) {
  std::vector<double> out(grid.basis_count(), 0.0);
  std::array<double, kMaxOrder + 1> local{};
  const std::size_t first = local_basis(grid, x, local);
  for (std::size_t r = 0; r <= grid.order; ++r) out[first + r] = local[r];
  return out;
}

std::vector<double> basis_grad(const SplineGrid& grid, double x) {
  std::vector<double> out(grid.basis_count(), 0.0);
  std::array<double, kMaxOrder + 1> local{}, d{};
  const std::size_t first = local_basis(grid, x, local, d);
  for (std::size_t r = 0; r <= grid.order; ++r) out[first + r] = d[r];
  return out;
}

Var spline_eval(const SplineGrid& grid, Var coeffs, Var x) {
  Graph& g = x.graph();
  if (&coeffs.graph() != &g) throw ContractError("spline_eval: operands on different graphs");
  const std::size_t nb = grid.basis_count();
  if (coeffs.size() != nb)
    throw ShapeError("spline_eval: expected " + std::to_string(nb) + " coefficients, got " +
                     std::to_string(coeffs.size()));
  const std::size_t k1 = grid.order + 1;
  auto xv = x.values();
  auto cv = coeffs.values();
  const std::size_t n = xv.size();

  // Saved for backward: window start, values and derivatives per point.
  auto first = std::make_shared<std::vector<std::size_t>>(n);
  auto vals = std::make_shared<std::vector<double>>(n * k1);
  auto ders = std::make_shared<std::vector<double>>(n * k1);
  std::vector<double> y(n);
  for (std::size_t b = 0; b < n; ++b) {
    std::span<double> v(vals->data() + b * k1, k1);
    std::span<double> d(ders->data() + b * k1, k1);
    const std::size_t f = local_basis(grid, xv[b], v, d);
    (*first)[b] = f;
    double acc = 0.0;
    for (std::size_t r = 0; r < k1; ++r) acc += cv[f + r] * v[r];
    y[b] = acc;
  }
  return g.record("spline_eval", x.shape(), std::move(y), {coeffs, x},
                  [coeffs, x, first, vals, ders, k1](Graph& g, std::span<const double> up) {
                    const std::size_t n = up.size();
                    if (g.requires_grad(coeffs)) {
                      auto dc = g.grad_buffer(coeffs);
                      for (std::size_t b = 0; b < n; ++b)
                        for (std::size_t r = 0; r < k1; ++r)
                          dc[(*first)[b] + r] += up[b] * (*vals)[b * k1 + r];
                    }
                    if (g.requires_grad(x)) {
                      auto cv = g.value(coeffs);
                      auto dx = g.grad_buffer(x);
                      for (std::size_t b = 0; b < n; ++b) {
                        double acc = 0.0;
                        for (std::size_t r = 0; r < k1; ++r)
                          acc += cv[(*first)[b] + r] * (*ders)[b * k1 + r];
                        dx[b] += up[b] * acc;
                      }
                    }
                  });
}

}  // namespace ainr
