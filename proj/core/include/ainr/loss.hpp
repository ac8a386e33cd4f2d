#pragma once

// Training objective: L1 in time plus a multi-resolution mel-STFT loss.

#include <cstddef>
#include <span>
#include <vector>

#include "ainr/dsp.hpp"
#include "ainr/tensor.hpp"

namespace ainr {

// HTK-mel triangular filters with unit peaks, n_mels x (fft/2 + 1).
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t fft_size = 0;
  double sample_rate = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
  Tensor matrix;

  static MelFilterbank make(std::size_t n_mels, double sample_rate, std::size_t fft_size,
                            double f_min = 0.0, double f_max = -1.0 /* sr/2 */);
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// |STFT(signal)| as [frames x bins]; differentiable w.r.t. the signal.
Var stft_mag(Var signal, const StftResolution& res);
// mag [frames x bins] -> [frames x n_mels].
Var mel_project(Var mag, const MelFilterbank& fb);

struct LossConfig {
  double lambda_time = 1.0;
  double lambda_freq = 1.0;
  std::vector<StftResolution> resolutions = default_resolutions();
  std::size_t n_mels = 80;
  double sample_rate = 22050.0;

  // (512,128,512), (1024,256,1024), (2048,512,2048), Hann.
  static std::vector<StftResolution> default_resolutions();
};

// Mean over resolutions of spectral convergence ||M - M^||_F / ||M||_F plus
// mean |log(M + 1e-7) - log(M^ + 1e-7)|, where M are mel magnitudes of the
// reference `x`.
class MelStftLoss {
 public:
  explicit MelStftLoss(const LossConfig& config);
  Var operator()(Var x, Var xhat) const;

  // Reference mel magnitudes, one [frames x n_mels] tensor per resolution.
  std::vector<Tensor> reference(std::span<const double> x) const;
  // Same value as operator() with x fixed to the signal behind `ref`.
  Var operator()(const std::vector<Tensor>& ref, Var xhat) const;

 private:
  std::vector<StftResolution> resolutions_;
  std::vector<MelFilterbank> filterbanks_;
};

// lambda_time * mean|x - xhat| + lambda_freq * mel-STFT loss.
class CombinedLoss {
 public:
  // A reference signal with its mel spectra computed once.
  struct Target {
    std::vector<double> samples;
    std::vector<Tensor> mel;
  };

  explicit CombinedLoss(const LossConfig& config);
  Var operator()(Var x, Var xhat) const;

  Target prepare(std::vector<double> x) const;
  Var operator()(const Target& target, Var xhat) const;
  const LossConfig& config() const { return config_; }

 private:
  LossConfig config_;
  MelStftLoss spectral_;
};

Var l1_loss(Var x, Var xhat);
Var mr_mel_stft_loss(Var x, Var xhat, const LossConfig& config);
Var combined_loss(Var x, Var xhat, const LossConfig& config);

}  // namespace ainr
