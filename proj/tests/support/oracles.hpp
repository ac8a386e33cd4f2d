#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// into the library's numerics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

// X_k = sum_t x_t e^{-2 pi i k t / n}, all n bins.
inline std::vector<Complex> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * Complex(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Textbook recursion, B_{i,0} = [t_i <= x < t_{i+1}].
inline double cox_de_boor(const std::vector<double>& t, std::size_t i, std::size_t k, double x) {
  if (k == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  const double d1 = t[i + k] - t[i];
  const double d2 = t[i + k + 1] - t[i + 1];
  if (d1 > 0.0) left = (x - t[i]) / d1 * cox_de_boor(t, i, k - 1, x);
  if (d2 > 0.0) right = (t[i + k + 1] - x) / d2 * cox_de_boor(t, i + 1, k - 1, x);
  return left + right;
}

// Uniform extended knot vector over [lo, hi] with G intervals and k extra on
// each side, built directly from its definition.
inline std::vector<double> uniform_knots(std::size_t g, std::size_t k, double lo, double hi) {
  const double h = (hi - lo) / static_cast<double>(g);
  std::vector<double> t;
  for (std::ptrdiff_t j = -static_cast<std::ptrdiff_t>(k); j <= static_cast<std::ptrdiff_t>(g + k); ++j)
    t.push_back(lo + static_cast<double>(j) * h);
  return t;
}

// 1-D Wasserstein-1 via quantile functions: integral over u in (0,1) of
// |F_p^{-1}(u) - F_q^{-1}(u)| with support s_i = i^2.
inline double wasserstein_quantile(std::vector<double> p, std::vector<double> q) {
  double sp = 0.0, sq = 0.0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  for (auto& v : p) v /= sp;
  for (auto& v : q) v /= sq;
  std::size_t i = 0, j = 0;
  double rem_p = p[0], rem_q = q[0];
  double w = 0.0;
  const std::size_t n = p.size();
  while (i < n && j < n) {
    const double m = std::min(rem_p, rem_q);
    const double si = static_cast<double>(i) * static_cast<double>(i);
    const double sj = static_cast<double>(j) * static_cast<double>(j);
    w += m * std::abs(si - sj);
    rem_p -= m;
    rem_q -= m;
    if (rem_p <= 1e-15) {
      if (++i < n) rem_p = p[i];
    }
    if (rem_q <= 1e-15) {
      if (++j < n) rem_q = q[j];
    }
  }
  return w;
}

// Central difference of a scalar function of a vector at coordinate `i`.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x, std::size_t i, double h = 1e-6) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline std::vector<double> sine_mixture(std::size_t n, double sample_rate,
                                        const std::vector<double>& freqs,
                                        const std::vector<double>& amps,
                                        const std::vector<double>& phases) {
  std::vector<double> x(n, 0.0);
  for (std::size_t c = 0; c < freqs.size(); ++c)
    for (std::size_t t = 0; t < n; ++t)
      x[t] += amps[c] * std::sin(2.0 * std::numbers::pi * freqs[c] * static_cast<double>(t) / sample_rate +
                                 phases[c]);
  return x;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ainr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
