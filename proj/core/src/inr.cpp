#include "ainr/inr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "ainr/error.hpp"

namespace ainr {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::nerf: return "nerf";
    case Arch::siren: return "siren";
    case Arch::rff: return "rff";
    case Arch::wire: return "wire";
    case Arch::finer: return "finer";
    case Arch::kan: return "kan";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : kAllArchs)
    if (arch_name(a) == name) return a;
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected nerf, siren, rff, wire, finer or kan)");
}

InrConfig InrConfig::defaults_for(Arch arch) {
  InrConfig c;
  c.arch = arch;
  switch (arch) {
    case Arch::kan: break;
    case Arch::nerf:
      c.layers = {128, 128, 128};
      c.encoding_length = 10;
      break;
    case Arch::siren:
    case Arch::finer:
      c.layers = {128, 128, 128};
      c.omega0 = 30.0;
      break;
    case Arch::wire:
      c.layers = {128, 128, 128};
      c.omega0 = 20.0;
      c.wire_scale = 10.0;
      break;
    case Arch::rff:
      c.layers = {128, 128, 128};
      break;
  }
  return c;
}

void InrConfig::validate() const {
  if (layers.empty()) throw ConfigError("at least one hidden layer is required");
  for (auto w : layers)
    if (w == 0) throw ConfigError("hidden layer widths must be positive");
  switch (arch) {
    case Arch::nerf:
    case Arch::kan:
      if (encoding_length == 0) throw ConfigError("encoding length must be positive");
      break;
    case Arch::rff:
      if (rff_features == 0 || !(rff_sigma > 0.0))
        throw ConfigError("rff needs positive feature count and sigma");
      break;
    case Arch::siren:
    case Arch::finer:
    case Arch::wire:
      if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");
      break;
  }
  if (arch == Arch::wire && !(wire_scale > 0.0)) throw ConfigError("wire scale must be positive");
  if (arch == Arch::finer && !(finer_bias_bound >= 0.0))
    throw ConfigError("finer bias bound must be non-negative");
  if (arch == Arch::kan) {
    if (grid_size == 0) throw ConfigError("grid size must be >= 1");
    if (!(spline_lo < spline_hi)) throw ConfigError("spline domain needs lo < hi");
  }
}

std::size_t InrConfig::input_dim() const {
  switch (arch) {
    case Arch::nerf:
    case Arch::kan: return 2 * encoding_length;
    case Arch::rff: return 2 * rff_features;
    default: return 1;
  }
}

bool operator==(const InrConfig& a, const InrConfig& b) {
  return a.arch == b.arch && a.layers == b.layers && a.encoding_length == b.encoding_length &&
         a.rff_features == b.rff_features && a.rff_sigma == b.rff_sigma &&
         a.omega0 == b.omega0 && a.wire_scale == b.wire_scale &&
         a.finer_bias_bound == b.finer_bias_bound && a.grid_size == b.grid_size &&
         a.spline_order == b.spline_order && a.scale_spline == b.scale_spline &&
         a.spline_lo == b.spline_lo && a.spline_hi == b.spline_hi && a.seed == b.seed;
}

namespace {

std::vector<std::size_t> layer_dims(const InrConfig& c) {
  std::vector<std::size_t> dims{c.input_dim()};
  dims.insert(dims.end(), c.layers.begin(), c.layers.end());
  dims.push_back(1);
  return dims;
}

}  // namespace

ParamLayout param_layout(const InrConfig& config) {
  config.validate();
  const auto dims = layer_dims(config);
  ParamLayout layout;
  std::size_t offset = 0;
  auto add = [&](std::string name, Shape shape) {
    ParamBlock b{std::move(name), offset, std::move(shape)};
    offset += b.size();
    layout.push_back(std::move(b));
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    if (config.arch == Arch::kan) {
      add(prefix + "base", {out, in});
      if (config.scale_spline) add(prefix + "scale", {out, in});
      add(prefix + "coeffs", {out, in, config.grid_size + config.spline_order});
    } else {
      add(prefix + "weight", {out, in});
      add(prefix + "bias", {out});
    }
  }
  return layout;
}

std::size_t param_count(const InrConfig& config) {
  const auto dims = layer_dims(config);
  std::size_t total = 0;
  if (config.arch == Arch::kan) {
    std::size_t edges = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) edges += dims[l] * dims[l + 1];
    const std::size_t per_edge =
        1 + (config.scale_spline ? 1 : 0) + config.grid_size + config.spline_order;
    total = edges * per_edge;
  } else {
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) total += dims[l + 1] * (dims[l] + 1);
  }
  return total;
}

std::size_t reference_param_count(Arch arch) {
  switch (arch) {
    case Arch::nerf: return 33261;
    case Arch::siren:
    case Arch::finer:
    case Arch::wire: return 31191;
    case Arch::rff: return 39201;
    case Arch::kan: return 33768;
  }
  return 0;
}

std::vector<double> time_grid(std::size_t n) {
  std::vector<double> t(n, 0.0);
  if (n < 2) return t;
  const double step = 2.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) t[i] = -1.0 + step * static_cast<double>(i);
  t[n - 1] = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

Var clamp_unit(Var times) {
  auto v = times.values();
  if (std::all_of(v.begin(), v.end(), [](double x) { return x >= -1.0 && x <= 1.0; }))
    return times;
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = std::clamp(v[i], -1.0, 1.0);
  return times.graph().record("clamp", times.shape(), std::move(y), {times},
                              [times](Graph& g, std::span<const double> up) {
                                if (!g.requires_grad(times)) return;
                                auto x = g.value(times);
                                auto dx = g.grad_buffer(times);
                                for (std::size_t i = 0; i < up.size(); ++i)
                                  if (x[i] > -1.0 && x[i] < 1.0) dx[i] += up[i];
                              });
}

}  // namespace

Var positional_encoding(Var times, std::size_t length) {
  auto t = times.values();
  const std::size_t n = t.size(), width = 2 * length;
  std::vector<double> y(n * width);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      const double arg = std::ldexp(std::numbers::pi, static_cast<int>(l)) * t[b];
      y[b * width + 2 * l] = std::sin(arg);
      y[b * width + 2 * l + 1] = std::cos(arg);
    }
  }
  return times.graph().record(
      "positional_encoding", {n, width}, std::move(y), {times},
      [times, length, width](Graph& g, std::span<const double> up) {
        if (!g.requires_grad(times)) return;
        auto t = g.value(times);
        auto dt = g.grad_buffer(times);
        for (std::size_t b = 0; b < t.size(); ++b) {
          for (std::size_t l = 0; l < length; ++l) {
            const double f = std::ldexp(std::numbers::pi, static_cast<int>(l));
            const double arg = f * t[b];
            dt[b] += f * (up[b * width + 2 * l] * std::cos(arg) -
                          up[b * width + 2 * l + 1] * std::sin(arg));
          }
        }
      });
}

Var fourier_features(Var times, std::span<const double> projection) {
  auto t = times.values();
  const std::size_t n = t.size(), m = projection.size(), width = 2 * m;
  auto freq = std::make_shared<std::vector<double>>(m);
  for (std::size_t j = 0; j < m; ++j) (*freq)[j] = 2.0 * std::numbers::pi * projection[j];
  std::vector<double> y(n * width);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t j = 0; j < m; ++j) {
      const double arg = (*freq)[j] * t[b];
      y[b * width + j] = std::cos(arg);
      y[b * width + m + j] = std::sin(arg);
    }
  return times.graph().record("fourier_features", {n, width}, std::move(y), {times},
                              [times, freq, m, width](Graph& g, std::span<const double> up) {
                                if (!g.requires_grad(times)) return;
                                auto t = g.value(times);
                                auto dt = g.grad_buffer(times);
                                for (std::size_t b = 0; b < t.size(); ++b)
                                  for (std::size_t j = 0; j < m; ++j) {
                                    const double f = (*freq)[j], arg = f * t[b];
                                    dt[b] += f * (-up[b * width + j] * std::sin(arg) +
                                                  up[b * width + m + j] * std::cos(arg));
                                  }
                              });
}

// ---------------------------------------------------------------------------
// KAN layer

namespace {

struct KanSaved {
  std::size_t n = 0, in = 0, out = 0, nb = 0, k1 = 0;
  std::vector<double> silu, dsilu;    // [n x in]
  std::vector<std::size_t> first;     // [n x in]
  std::vector<double> bval, bder;     // [n x in x k1]
  // Parameters transposed so the inner loops run over outputs contiguously.
  std::vector<double> base_t, scale_t;  // [in x out]
  std::vector<double> coeff_t;          // [in x nb x out]
};

void transpose_params(KanSaved& s, std::span<const double> base, std::span<const double> scale,
                      std::span<const double> coeffs) {
  s.base_t.assign(s.in * s.out, 0.0);
  s.scale_t.assign(s.in * s.out, 1.0);
  s.coeff_t.assign(s.in * s.nb * s.out, 0.0);
  for (std::size_t q = 0; q < s.out; ++q)
    for (std::size_t p = 0; p < s.in; ++p) {
      s.base_t[p * s.out + q] = base[q * s.in + p];
      if (!scale.empty()) s.scale_t[p * s.out + q] = scale[q * s.in + p];
      for (std::size_t j = 0; j < s.nb; ++j)
        s.coeff_t[(p * s.nb + j) * s.out + q] = coeffs[(q * s.in + p) * s.nb + j];
    }
}

}  // namespace

Var kan_layer(Var x, Var base, Var scale, Var coeffs, const SplineGrid& grid) {
  Graph& g = x.graph();
  const auto& sx = x.shape();
  const auto& sb = base.shape();
  if (sx.size() != 2 || sb.size() != 2 || sb[1] != sx[1])
    throw ShapeError("kan_layer: input " + to_string(sx) + " vs base weights " + to_string(sb));
  const bool has_scale = scale.valid();
  if (has_scale && scale.shape() != sb)
    throw ShapeError("kan_layer: scale weights " + to_string(scale.shape()));
  if (coeffs.shape() != Shape{sb[0], sb[1], grid.basis_count()})
    throw ShapeError("kan_layer: coefficients " + to_string(coeffs.shape()));

  auto s = std::make_shared<KanSaved>();
  s->n = sx[0];
  s->in = sx[1];
  s->out = sb[0];
  s->nb = grid.basis_count();
  s->k1 = grid.order + 1;
  const std::size_t n = s->n, in = s->in, out = s->out, k1 = s->k1;
  transpose_params(*s, base.values(), has_scale ? scale.values() : std::span<const double>{},
                   coeffs.values());

  auto xv = x.values();
  s->silu.resize(n * in);
  s->dsilu.resize(n * in);
  s->first.resize(n * in);
  s->bval.resize(n * in * k1);
  s->bder.resize(n * in * k1);
  for (std::size_t i = 0; i < n * in; ++i) {
    const double v = xv[i];
    const double sig = 1.0 / (1.0 + std::exp(-v));
    s->silu[i] = v * sig;
    s->dsilu[i] = sig * (1.0 + v * (1.0 - sig));
    s->first[i] = local_basis(grid, v, std::span<double>(s->bval.data() + i * k1, k1),
                              std::span<double>(s->bder.data() + i * k1, k1));
  }

  std::vector<double> y(n * out, 0.0);
  std::vector<double> tmp(out);
  for (std::size_t b = 0; b < n; ++b) {
    double* yr = y.data() + b * out;
    for (std::size_t p = 0; p < in; ++p) {
      const std::size_t i = b * in + p;
      std::fill(tmp.begin(), tmp.end(), 0.0);
      for (std::size_t r = 0; r < k1; ++r) {
        const double bv = s->bval[i * k1 + r];
        const double* c = s->coeff_t.data() + (p * s->nb + s->first[i] + r) * out;
        for (std::size_t q = 0; q < out; ++q) tmp[q] += c[q] * bv;
      }
      const double* bw = s->base_t.data() + p * out;
      const double* sw = s->scale_t.data() + p * out;
      const double sv = s->silu[i];
      for (std::size_t q = 0; q < out; ++q) yr[q] += bw[q] * sv + sw[q] * tmp[q];
    }
  }

  std::vector<Var> parents{x, base, coeffs};
  if (has_scale) parents.push_back(scale);
  return g.record(
      "kan_layer", {n, out}, std::move(y), parents,
      [x, base, scale, coeffs, has_scale, s](Graph& g, std::span<const double> up) {
        const std::size_t n = s->n, in = s->in, out = s->out, k1 = s->k1, nb = s->nb;
        const bool gx = g.requires_grad(x);
        const bool gparams = g.requires_grad(base) || g.requires_grad(coeffs) ||
                             (has_scale && g.requires_grad(scale));
        std::vector<double> dbase_t, dscale_t, dcoeff_t;
        if (gparams) {
          dbase_t.assign(in * out, 0.0);
          dscale_t.assign(in * out, 0.0);
          dcoeff_t.assign(in * nb * out, 0.0);
        }
        std::span<double> dx;
        if (gx) dx = g.grad_buffer(x);
        std::vector<double> tmp(out), dtmp(out);
        for (std::size_t b = 0; b < n; ++b) {
          const double* gr = up.data() + b * out;
          for (std::size_t p = 0; p < in; ++p) {
            const std::size_t i = b * in + p;
            const std::size_t f = s->first[i];
            const double* bv = s->bval.data() + i * k1;
            const double* bd = s->bder.data() + i * k1;
            std::fill(tmp.begin(), tmp.end(), 0.0);
            std::fill(dtmp.begin(), dtmp.end(), 0.0);
            for (std::size_t r = 0; r < k1; ++r) {
              const double* c = s->coeff_t.data() + (p * nb + f + r) * out;
              for (std::size_t q = 0; q < out; ++q) {
                tmp[q] += c[q] * bv[r];
                dtmp[q] += c[q] * bd[r];
              }
            }
            const double* bw = s->base_t.data() + p * out;
            const double* sw = s->scale_t.data() + p * out;
            if (gx) {
              const double ds = s->dsilu[i];
              double acc = 0.0;
              for (std::size_t q = 0; q < out; ++q) acc += gr[q] * (bw[q] * ds + sw[q] * dtmp[q]);
              dx[i] += acc;
            }
            if (gparams) {
              const double sv = s->silu[i];
              double* db = dbase_t.data() + p * out;
              double* dsw = dscale_t.data() + p * out;
              for (std::size_t q = 0; q < out; ++q) {
                db[q] += gr[q] * sv;
                dsw[q] += gr[q] * tmp[q];
              }
              for (std::size_t r = 0; r < k1; ++r) {
                double* dc = dcoeff_t.data() + (p * nb + f + r) * out;
                for (std::size_t q = 0; q < out; ++q) dc[q] += gr[q] * sw[q] * bv[r];
              }
            }
          }
        }
        if (!gparams) return;
        if (g.requires_grad(base)) {
          auto d = g.grad_buffer(base);
          for (std::size_t q = 0; q < out; ++q)
            for (std::size_t p = 0; p < in; ++p) d[q * in + p] += dbase_t[p * out + q];
        }
        if (has_scale && g.requires_grad(scale)) {
          auto d = g.grad_buffer(scale);
          for (std::size_t q = 0; q < out; ++q)
            for (std::size_t p = 0; p < in; ++p) d[q * in + p] += dscale_t[p * out + q];
        }
        if (g.requires_grad(coeffs)) {
          auto d = g.grad_buffer(coeffs);
          for (std::size_t q = 0; q < out; ++q)
            for (std::size_t p = 0; p < in; ++p)
              for (std::size_t j = 0; j < nb; ++j)
                d[(q * in + p) * nb + j] += dcoeff_t[(p * nb + j) * out + q];
        }
      });
}

// ---------------------------------------------------------------------------
// Model

std::vector<double> rff_projection(const InrConfig& config) {
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::normal_distribution<double> normal(0.0, config.rff_sigma);
  std::vector<double> b(config.rff_features);
  for (auto& v : b) v = normal(rng);
  return b;
}

InrModel::InrModel(InrConfig config, std::vector<double> params)
    : config_(std::move(config)), layout_(param_layout(config_)), params_(std::move(params)) {
  if (params_.size() != ainr::param_count(config_))
    throw ShapeError("expected " + std::to_string(ainr::param_count(config_)) +
                     " parameters, got " + std::to_string(params_.size()));
  if (config_.arch == Arch::rff) projection_ = ainr::rff_projection(config_);
  if (config_.arch == Arch::kan)
    grid_ = SplineGrid::make(config_.grid_size, config_.spline_order, config_.spline_lo,
                             config_.spline_hi);
}

InrModel InrModel::build(InrConfig config, std::uint64_t seed) {
  config.seed = seed;
  return build(config);
}

InrModel InrModel::build(const InrConfig& config) {
  const auto layout = param_layout(config);
  std::vector<double> params(ainr::param_count(config));
  std::mt19937_64 rng(config.seed);
  auto uniform = [&](std::span<double> dst, double bound) {
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& v : dst) v = d(rng);
  };
  auto gaussian = [&](std::span<double> dst, double stddev) {
    std::normal_distribution<double> d(0.0, stddev);
    for (auto& v : dst) v = d(rng);
  };
  auto view = [&](const ParamBlock& b) {
    return std::span<double>(params.data() + b.offset, b.size());
  };

  if (config.arch == Arch::kan) {
    const double nb = static_cast<double>(config.grid_size + config.spline_order);
    for (const auto& b : layout) {
      const double out = static_cast<double>(b.shape[0]), in = static_cast<double>(b.shape[1]);
      if (b.shape.size() == 3)
        gaussian(view(b), 0.1 / std::sqrt(nb));
      else
        uniform(view(b), std::sqrt(6.0 / (in + out)));  // Xavier
    }
    return InrModel(config, std::move(params));
  }

  const std::size_t n_layers = layout.size() / 2;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& w = layout[2 * l];
    const auto& bias = layout[2 * l + 1];
    const double in = static_cast<double>(w.shape[1]);
    const bool last = l + 1 == n_layers;
    const double bias_bound = 1.0 / std::sqrt(in);
    switch (config.arch) {
      case Arch::nerf:
      case Arch::rff:
        uniform(view(w), last ? 1.0 / std::sqrt(in) : std::sqrt(6.0 / in));
        uniform(view(bias), bias_bound);
        break;
      case Arch::siren:
      case Arch::finer:
        uniform(view(w), l == 0 ? 1.0 / in : std::sqrt(6.0 / in) / config.omega0);
        uniform(view(bias), (config.arch == Arch::finer && l == 0) ? config.finer_bias_bound
                                                                   : bias_bound);
        break;
      case Arch::wire:
        gaussian(view(w), 1.0 / std::sqrt(in));
        uniform(view(bias), bias_bound);
        break;
      case Arch::kan: break;
    }
  }
  return InrModel(config, std::move(params));
}

InrModel InrModel::unflatten(const InrConfig& config, std::span<const double> params) {
  return InrModel(config, std::vector<double>(params.begin(), params.end()));
}

InrModel InrModel::apply_delta(std::span<const double> delta) const {
  if (delta.size() != params_.size())
    throw ShapeError("delta has " + std::to_string(delta.size()) + " entries, model has " +
                     std::to_string(params_.size()) + " parameters");
  std::vector<double> p(params_);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += delta[i];
  return InrModel(config_, std::move(p));
}

Var InrModel::forward(Graph&, Var params, Var times) const {
  if (params.size() != params_.size())
    throw ShapeError("forward: parameter vector has " + std::to_string(params.size()) +
                     " entries, expected " + std::to_string(params_.size()));
  Var t = clamp_unit(times);
  const std::size_t n = t.size();
  auto block = [&](std::size_t i) {
    return slice(params, layout_[i].offset, layout_[i].shape);
  };

  if (config_.arch == Arch::kan) {
    Var h = positional_encoding(t, config_.encoding_length);
    std::size_t i = 0;
    while (i < layout_.size()) {
      Var base = block(i++);
      Var scale;
      if (config_.scale_spline) scale = block(i++);
      Var coeffs = block(i++);
      h = kan_layer(h, base, scale, coeffs, grid_);
    }
    return reshape(h, {n});
  }

  Var h;
  switch (config_.arch) {
    case Arch::nerf: h = positional_encoding(t, config_.encoding_length); break;
    case Arch::rff: h = fourier_features(t, projection_); break;
    default: h = reshape(t, {n, 1}); break;
  }
  const std::size_t n_layers = layout_.size() / 2;
  const double w0 = config_.omega0;
  const double s0sq = config_.wire_scale * config_.wire_scale;
  Var imag;  // wire: imaginary part of the hidden state
  for (std::size_t l = 0; l < n_layers; ++l) {
    Var w = block(2 * l), b = block(2 * l + 1);
    Var z = linear(h, w, b);
    if (l + 1 == n_layers) {
      h = z;  // wire: real part of the output
      break;
    }
    switch (config_.arch) {
      case Arch::nerf:
      case Arch::rff: h = relu(z); break;
      case Arch::siren: h = sin(scale(z, w0)); break;
      case Arch::finer: h = sin(scale(mul(abs(shift(z, 1.0)), z), w0)); break;
      case Arch::wire: {
        // psi(u) = exp(i w0 u) exp(-|s0 u|^2) for u = ur + i ui
        //        = exp(-w0 ui - s0^2 (ur^2 + ui^2)) (cos(w0 ur) + i sin(w0 ur))
        Var ur = z;
        Var envelope_arg = scale(square(ur), -s0sq);
        if (imag.valid()) {
          Var ui = linear(imag, w);
          envelope_arg = add(envelope_arg, add(scale(square(ui), -s0sq), scale(ui, -w0)));
        }
        Var envelope = exp(envelope_arg);
        Var phase = scale(ur, w0);
        h = mul(envelope, cos(phase));
        imag = mul(envelope, sin(phase));
        break;
      }
      case Arch::kan: break;
    }
  }
  return reshape(h, {n});
}

std::vector<double> InrModel::render(std::span<const double> times, Precision precision) const {
  Graph g(precision);
  Var p = g.constant(Tensor::vector(params_));
  Var t = g.constant(Tensor::vector(std::vector<double>(times.begin(), times.end())));
  auto out = forward(g, p, t).values();
  return {out.begin(), out.end()};
}

}  // namespace ainr
