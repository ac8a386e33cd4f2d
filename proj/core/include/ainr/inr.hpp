#pragma once

// Implicit neural representations of audio: networks mapping a time
// coordinate in [-1, 1] to one amplitude.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ainr/bspline.hpp"
#include "ainr/tensor.hpp"

namespace ainr {

enum class Arch : std::uint8_t { nerf = 0, siren = 1, rff = 2, wire = 3, finer = 4, kan = 5 };

inline constexpr Arch kAllArchs[] = {Arch::nerf, Arch::siren, Arch::rff,
                                     Arch::wire, Arch::finer, Arch::kan};

std::string_view arch_name(Arch arch);
// Accepts the lower-case names printed by arch_name(). Throws ConfigError.
Arch parse_arch(std::string_view name);

struct InrConfig {
  Arch arch = Arch::kan;
  std::vector<std::size_t> layers{48, 24, 12};  // hidden widths

  std::size_t encoding_length = 8;  // nerf, kan: positional-encoding octaves L
  std::size_t rff_features = 64;    // rff: m
  double rff_sigma = 10.0;          // rff: std of the projection B

  double omega0 = 30.0;           // siren, finer, wire frequency
  double wire_scale = 10.0;       // wire: s0
  double finer_bias_bound = 1.0;  // finer: first-layer bias ~ U(-k, k)

  std::size_t grid_size = 10;    // kan: G
  std::size_t spline_order = 2;  // kan: k
  bool scale_spline = true;      // kan: learnable w_s
  double spline_lo = -1.0;
  double spline_hi = 1.0;

  std::uint64_t seed = 0;

  // Per-architecture defaults. MLP families get three hidden layers of 128.
  static InrConfig defaults_for(Arch arch);
  void validate() const;
  std::size_t input_dim() const;  // width after the embedding
};

bool operator==(const InrConfig& a, const InrConfig& b);

// Named contiguous window of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  Shape shape;
  std::size_t size() const { return numel(shape); }
};
using ParamLayout = std::vector<ParamBlock>;

// Flat parameter order is layer-major. Dense layers store W [out x in] then
// b [out]; KAN layers store w_b [out x in], w_s [out x in] (if scale_spline),
// then coefficients [out x in x (G+k)]. KAN layers carry no bias.
ParamLayout param_layout(const InrConfig& config);
std::size_t param_count(const InrConfig& config);

// Reference parameter counts of the single-clip comparison table; used only
// to print next to the actual counts.
std::size_t reference_param_count(Arch arch);

// Evenly spaced time coordinates over [-1, 1], one per sample.
std::vector<double> time_grid(std::size_t n);

// [sin(2^0 pi t), cos(2^0 pi t), ..., sin(2^{L-1} pi t), cos(2^{L-1} pi t)]
// per row; times [n] -> [n x 2L].
Var positional_encoding(Var times, std::size_t length);

// [cos(2 pi B t), sin(2 pi B t)]; times [n] -> [n x 2m].
Var fourier_features(Var times, std::span<const double> projection);

// One KAN layer: out_q = sum_p w_b[q,p] SiLU(x_p) + w_s[q,p] spline_{q,p}(x_p).
// x: [n x in]; base, scale: [out x in]; coeffs: [out x in x (G+k)].
// `scale` may be an invalid Var, meaning w_s == 1.
Var kan_layer(Var x, Var base, Var scale, Var coeffs, const SplineGrid& grid);

class InrModel {
 public:
  // Initialises parameters from config.seed.
  static InrModel build(const InrConfig& config);
  static InrModel build(InrConfig config, std::uint64_t seed);
  // Rebuilds a model around an existing flat parameter vector.
  static InrModel unflatten(const InrConfig& config, std::span<const double> params);

  const InrConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<const double> parameters() const { return params_; }
  std::vector<double> flatten() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<double>& rff_projection() const { return projection_; }

  // theta' = theta + delta; leaves *this unchanged.
  InrModel apply_delta(std::span<const double> delta) const;

  // Differentiable forward with an explicit flat parameter Var of length
  // param_count(); times [n] -> amplitudes [n]. Times are clamped to [-1, 1].
  Var forward(Graph& graph, Var params, Var times) const;
  // Forward with this model's own parameters as constants.
  std::vector<double> render(std::span<const double> times, Precision precision = Precision::f64) const;

 private:
  InrModel(InrConfig config, std::vector<double> params);

  InrConfig config_;
  ParamLayout layout_;
  std::vector<double> params_;
  std::vector<double> projection_;  // rff B, m entries
  SplineGrid grid_;                 // kan only
};

// RFF projection B ~ N(0, sigma^2), drawn from a stream derived from the
// config seed so it never changes for a given config.
std::vector<double> rff_projection(const InrConfig& config);

}  // namespace ainr
