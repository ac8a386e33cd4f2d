#include "ainr/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "ainr/error.hpp"

namespace ainr {

void StftResolution::validate() const {
  if (fft_size == 0 || hop_size == 0 || window_size == 0)
    throw ConfigError("STFT sizes must be positive");
  if (!(hop_size <= window_size && window_size <= fft_size))
    throw ConfigError("STFT needs hop <= window <= fft, got hop " + std::to_string(hop_size) +
                      ", window " + std::to_string(window_size) + ", fft " +
                      std::to_string(fft_size));
}

std::size_t StftResolution::frames(std::size_t n) const {
  if (n < window_size) return 0;
  return 1 + (n - window_size) / hop_size;
}

namespace dsp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan r2c(std::size_t n) { return get(n, true); }
  fftw_plan c2r(std::size_t n) { return get(n, false); }

 private:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, bool forward) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    fftw_plan plan = forward
                         ? fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED)
                         : fftw_plan_dft_c2r_1d(len, cplx, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(real);
    fftw_free(cplx);
    if (!plan) throw Error("FFTW failed to plan a transform of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace

std::vector<Complex> rfft(std::span<const double> x) {
  if (x.empty()) throw ShapeError("rfft of empty signal");
  std::vector<double> in(x.begin(), x.end());
  std::vector<Complex> out(x.size() / 2 + 1);
  fftw_execute_dft_r2c(PlanCache::instance().r2c(x.size()), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<Complex> fft_full(std::span<const double> x) {
  auto half = rfft(x);
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < half.size(); ++k) out[k] = half[k];
  for (std::size_t k = half.size(); k < n; ++k) out[k] = std::conj(half[n - k]);
  return out;
}

std::vector<double> irfft_unnormalized(std::span<const Complex> half, std::size_t n) {
  if (half.size() != n / 2 + 1) throw ShapeError("irfft: half spectrum length mismatch");
  std::vector<Complex> in(half.begin(), half.end());  // c2r overwrites its input
  std::vector<double> out(n);
  fftw_execute_dft_c2r(PlanCache::instance().c2r(n), reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

std::vector<double> analysis_window(const StftResolution& res) {
  res.validate();
  std::vector<double> w(res.fft_size, 0.0);
  const std::size_t offset = (res.fft_size - res.window_size) / 2;
  if (res.window == WindowKind::hann) {
    auto h = hann_window(res.window_size);
    std::copy(h.begin(), h.end(), w.begin() + static_cast<std::ptrdiff_t>(offset));
  } else {
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(offset),
              w.begin() + static_cast<std::ptrdiff_t>(offset + res.window_size), 1.0);
  }
  return w;
}

std::vector<Complex> stft(std::span<const double> signal, const StftResolution& res) {
  res.validate();
  const std::size_t frames = res.frames(signal.size());
  if (frames == 0)
    throw ContractError("STFT: signal of " + std::to_string(signal.size()) +
                        " samples is shorter than one window of " +
                        std::to_string(res.window_size));
  const auto window = analysis_window(res);
  const std::size_t offset = (res.fft_size - res.window_size) / 2;
  const std::size_t bins = res.bins();
  std::vector<Complex> out(frames * bins);
  std::vector<double> frame(res.fft_size);
  for (std::size_t f = 0; f < frames; ++f) {
    // Frame f covers signal[f*hop, f*hop + window); its centred padding reads
    // zeros outside the signal.
    const std::ptrdiff_t start =
        static_cast<std::ptrdiff_t>(f * res.hop_size) - static_cast<std::ptrdiff_t>(offset);
    for (std::size_t i = 0; i < res.fft_size; ++i) {
      const std::ptrdiff_t s = start + static_cast<std::ptrdiff_t>(i);
      frame[i] = (s >= 0 && s < static_cast<std::ptrdiff_t>(signal.size()))
                     ? signal[static_cast<std::size_t>(s)] * window[i]
                     : 0.0;
    }
    auto spec = rfft(frame);
    std::copy(spec.begin(), spec.end(), out.begin() + static_cast<std::ptrdiff_t>(f * bins));
  }
  return out;
}

std::vector<double> stft_magnitude(std::span<const double> signal, const StftResolution& res) {
  auto spec = stft(signal, res);
  std::vector<double> mag(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) mag[i] = std::abs(spec[i]);
  return mag;
}

}  // namespace dsp
}  // namespace ainr
