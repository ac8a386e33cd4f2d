#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ainr {

enum class WindowKind { hann, rectangular };

// One STFT configuration. The analysis window is centred inside the FFT frame
// when window_size < fft_size. Frames are not padded: a signal of n samples
// yields 1 + (n - window_size) / hop_size frames.
struct StftResolution {
  std::size_t fft_size = 1024;
  std::size_t hop_size = 256;
  std::size_t window_size = 1024;
  WindowKind window = WindowKind::hann;

  void validate() const;
  std::size_t bins() const { return fft_size / 2 + 1; }
  std::size_t frames(std::size_t n) const;
};

namespace dsp {

using Complex = std::complex<double>;

// Real-input DFT, bins 0..n/2.
std::vector<Complex> rfft(std::span<const double> x);
// Real-input DFT, all n bins.
std::vector<Complex> fft_full(std::span<const double> x);
// Unnormalised inverse of a Hermitian half spectrum (n/2+1 bins) to n real
// samples: y_t = sum_{k=0}^{n-1} Y_k e^{+2 pi i k t / n}.
std::vector<double> irfft_unnormalized(std::span<const Complex> half, std::size_t n);

// Periodic Hann window (matches torch.hann_window default).
std::vector<double> hann_window(std::size_t n);
// Window of res.window_size, zero-padded and centred to res.fft_size.
std::vector<double> analysis_window(const StftResolution& res);

// Complex STFT frames (frames x bins, row-major).
std::vector<Complex> stft(std::span<const double> signal, const StftResolution& res);
// |STFT| (frames x bins, row-major).
std::vector<double> stft_magnitude(std::span<const double> signal, const StftResolution& res);

}  // namespace dsp
}  // namespace ainr
