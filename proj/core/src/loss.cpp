#include "ainr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "ainr/error.hpp"

namespace ainr {

namespace {
constexpr double kLogGuard = 1e-7;
constexpr double kMagnitudeGuard = 1e-12;
}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MelFilterbank::make(std::size_t n_mels, double sample_rate, std::size_t fft_size,
                                  double f_min, double f_max) {
  if (f_max < 0.0) f_max = sample_rate / 2.0;
  if (n_mels == 0 || fft_size == 0 || !(sample_rate > 0.0) || !(f_min < f_max))
    throw ConfigError("invalid mel filterbank parameters");
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.fft_size = fft_size;
  fb.sample_rate = sample_rate;
  fb.f_min = f_min;
  fb.f_max = f_max;
  const std::size_t bins = fft_size / 2 + 1;
  const double mlo = hz_to_mel(f_min), mhi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) /
                                   static_cast<double>(n_mels + 1));
  std::vector<double> w(n_mels * bins, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lower = edges[m], center = edges[m + 1], upper = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      const double rise = (f - lower) / (center - lower);
      const double fall = (upper - f) / (upper - center);
      w[m * bins + k] = std::max(0.0, std::min(rise, fall));
    }
  }
  fb.matrix = Tensor::matrix(n_mels, bins, std::move(w));
  return fb;
}

Var stft_mag(Var signal, const StftResolution& res) {
  auto x = signal.values();
  auto spec = std::make_shared<std::vector<dsp::Complex>>(dsp::stft(x, res));
  const std::size_t bins = res.bins();
  const std::size_t frames = spec->size() / bins;
  std::vector<double> mag(spec->size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs((*spec)[i]);
  return signal.graph().record(
      "stft_mag", {frames, bins}, std::move(mag), {signal},
      [signal, res, spec, frames, bins](Graph& g, std::span<const double> up) {
        if (!g.requires_grad(signal)) return;
        auto dx = g.grad_buffer(signal);
        const auto window = dsp::analysis_window(res);
        const std::size_t n = res.fft_size;
        const std::size_t offset = (res.fft_size - res.window_size) / 2;
        std::vector<dsp::Complex> half(bins);
        for (std::size_t f = 0; f < frames; ++f) {
          // d|X_k|/dy_t = Re(conj(X_k) e^{-2 pi i k t/n}) / |X_k|, so the frame
          // adjoint is Re(sum_k u_k e^{+2 pi i k t/n}) with u_k = g_k X_k/|X_k|,
          // a Hermitian inverse transform after halving the mirrored bins.
          for (std::size_t k = 0; k < bins; ++k) {
            const dsp::Complex z = (*spec)[f * bins + k];
            const double m = std::max(std::abs(z), kMagnitudeGuard);
            dsp::Complex u = up[f * bins + k] * z / m;
            const bool self_mirror = k == 0 || (n % 2 == 0 && k == n / 2);
            half[k] = self_mirror ? u : 0.5 * u;
          }
          auto frame_grad = dsp::irfft_unnormalized(half, n);
          const std::ptrdiff_t start =
              static_cast<std::ptrdiff_t>(f * res.hop_size) - static_cast<std::ptrdiff_t>(offset);
          for (std::size_t i = 0; i < n; ++i) {
            const std::ptrdiff_t s = start + static_cast<std::ptrdiff_t>(i);
            if (s >= 0 && s < static_cast<std::ptrdiff_t>(dx.size()) && window[i] != 0.0)
              dx[static_cast<std::size_t>(s)] += frame_grad[i] * window[i];
          }
        }
      });
}

Var mel_project(Var mag, const MelFilterbank& fb) {
  const auto& s = mag.shape();
  if (s.size() != 2 || s[1] != fb.matrix.shape[1])
    throw ShapeError("mel_project: magnitudes " + to_string(s) + " vs filterbank " +
                     to_string(fb.matrix.shape));
  Var w = mag.graph().constant(fb.matrix);
  return linear(mag, w);
}

std::vector<StftResolution> LossConfig::default_resolutions() {
  return {{512, 128, 512, WindowKind::hann},
          {1024, 256, 1024, WindowKind::hann},
          {2048, 512, 2048, WindowKind::hann}};
}

MelStftLoss::MelStftLoss(const LossConfig& config) : resolutions_(config.resolutions) {
  if (resolutions_.empty()) throw ConfigError("mel-STFT loss needs at least one resolution");
  for (const auto& r : resolutions_) {
    r.validate();
    filterbanks_.push_back(MelFilterbank::make(config.n_mels, config.sample_rate, r.fft_size));
  }
}

namespace {

Var spectral_term(Var m, Var mh) {
  Var num = sqrt(sum(square(sub(m, mh))));
  Var den = shift(sqrt(sum(square(m))), kLogGuard);
  Var convergence = div(num, den);
  Var log_term = mean(abs(sub(log(shift(m, kLogGuard)), log(shift(mh, kLogGuard)))));
  return add(convergence, log_term);
}

}  // namespace

Var MelStftLoss::operator()(Var x, Var xhat) const {
  if (x.size() != xhat.size())
    throw ShapeError("mel-STFT loss: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(xhat.size()));
  Var total;
  for (std::size_t i = 0; i < resolutions_.size(); ++i) {
    Var m = mel_project(stft_mag(x, resolutions_[i]), filterbanks_[i]);
    Var mh = mel_project(stft_mag(xhat, resolutions_[i]), filterbanks_[i]);
    Var term = spectral_term(m, mh);
    total = total.valid() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(resolutions_.size()));
}

std::vector<Tensor> MelStftLoss::reference(std::span<const double> x) const {
  Graph g;
  Var xv = g.constant(Tensor::vector({x.begin(), x.end()}));
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < resolutions_.size(); ++i)
    out.push_back(mel_project(stft_mag(xv, resolutions_[i]), filterbanks_[i]).tensor());
  return out;
}

Var MelStftLoss::operator()(const std::vector<Tensor>& ref, Var xhat) const {
  if (ref.size() != resolutions_.size())
    throw ShapeError("mel-STFT loss: reference has " + std::to_string(ref.size()) +
                     " resolutions, expected " + std::to_string(resolutions_.size()));
  Graph& g = xhat.graph();
  Var total;
  for (std::size_t i = 0; i < resolutions_.size(); ++i) {
    Var mh = mel_project(stft_mag(xhat, resolutions_[i]), filterbanks_[i]);
    if (mh.shape() != ref[i].shape)
      throw ShapeError("mel-STFT loss: reference " + to_string(ref[i].shape) + " vs estimate " +
                       to_string(mh.shape()));
    Var term = spectral_term(g.constant(ref[i]), mh);
    total = total.valid() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(resolutions_.size()));
}

CombinedLoss::CombinedLoss(const LossConfig& config) : config_(config), spectral_(config) {
  if (config.lambda_time < 0.0 || config.lambda_freq < 0.0)
    throw ConfigError("loss weights must be non-negative");
}

CombinedLoss::Target CombinedLoss::prepare(std::vector<double> x) const {
  Target t;
  if (config_.lambda_freq != 0.0) t.mel = spectral_.reference(x);
  t.samples = std::move(x);
  return t;
}

Var CombinedLoss::operator()(const Target& target, Var xhat) const {
  if (target.samples.size() != xhat.size())
    throw ShapeError("combined loss: lengths " + std::to_string(target.samples.size()) + " and " +
                     std::to_string(xhat.size()));
  Var x = xhat.graph().constant(Tensor(xhat.shape(), target.samples));
  Var time_term = scale(l1_loss(x, xhat), config_.lambda_time);
  if (config_.lambda_freq == 0.0) return time_term;
  return add(time_term, scale(spectral_(target.mel, xhat), config_.lambda_freq));
}

Var CombinedLoss::operator()(Var x, Var xhat) const {
  if (x.size() != xhat.size())
    throw ShapeError("combined loss: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(xhat.size()));
  Var time_term = scale(l1_loss(x, xhat), config_.lambda_time);
  if (config_.lambda_freq == 0.0) return time_term;
  return add(time_term, scale(spectral_(x, xhat), config_.lambda_freq));
}

Var l1_loss(Var x, Var xhat) {
  if (x.shape() != xhat.shape())
    throw ShapeError("l1 loss: shapes " + to_string(x.shape()) + " and " +
                     to_string(xhat.shape()));
  return mean(abs(sub(x, xhat)));
}

Var mr_mel_stft_loss(Var x, Var xhat, const LossConfig& config) {
  return MelStftLoss(config)(x, xhat);
}

Var combined_loss(Var x, Var xhat, const LossConfig& config) {
  return CombinedLoss(config)(x, xhat);
}

}  // namespace ainr
