#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ainr/dsp.hpp"
#include "ainr/tensor.hpp"

namespace ainr {

// PSNR reported when the reconstruction is exact.
inline constexpr double kPsnrExact = 999.0;
inline constexpr double kSiSnrCap = 100.0;

struct MsePsnr {
  double mse = 0.0;
  double psnr = 0.0;
};

// PSNR uses a full-scale peak of 1.0.
MsePsnr mse_psnr(std::span<const double> x, std::span<const double> xhat);

// Mean over frames of the RMS difference of log10 power spectra, power floor
// 1e-8. Default STFT: Hann, fft 2048, hop 512.
StftResolution lsd_resolution();
double lsd(std::span<const double> x, std::span<const double> xhat,
           const StftResolution& res = lsd_resolution());

// Scale-invariant SNR in dB, clamped to [-100, 100].
double si_snr(std::span<const double> x, std::span<const double> xhat);

// 1-D Wasserstein distance between two histograms on the support
// s_i = i^2. Inputs are non-negative weights and are normalised here.
double squared_support_wasserstein(std::span<const double> p, std::span<const double> q);

// Wasserstein distance between the normalised |FFT| of both signals on the
// squared-index support, divided by the signal length.
double spectral_wasserstein(std::span<const double> x, std::span<const double> xhat);

// 20 log10(|STFT| + 1e-7) as [frames x bins].
Tensor spectrogram_db(std::span<const double> x, const StftResolution& res);

// Writes <stem>.csv (frames rows x bins columns, dB) and <stem>.pgm (binary
// P5, width = frames, height = bins, row r = bin r, min..max dB -> 0..255).
void spectrogram_export(std::span<const double> x, const std::filesystem::path& stem,
                        const StftResolution& res);

// Perceptual metrics of the comparison table that this toolkit deliberately
// does not compute (they need external pretrained models).
inline constexpr std::array<std::string_view, 3> kAbsentMetrics{"pesq", "stoi", "cdpam"};

struct MetricValues {
  double mse = 0.0;
  double psnr = 0.0;
  double lsd = 0.0;
  double sisnr = 0.0;
  double wd = 0.0;
};

// sisnr and wd are NaN when they are undefined (silent reference or estimate).
MetricValues compute_metrics(std::span<const double> x, std::span<const double> xhat,
                             const StftResolution& lsd_res = lsd_resolution());

struct MetricsRow {
  std::string clip_id;
  std::string arch;
  std::size_t params = 0;
  MetricValues values;
};

struct MetricsAggregate {
  std::string arch;
  std::size_t params = 0;
  std::size_t count = 0;
  MetricValues mean;
  MetricValues stddev;  // population standard deviation
};

class MetricsReport {
 public:
  void add(MetricsRow row);
  void skip(std::string clip_id, std::string reason);

  const std::vector<MetricsRow>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& skipped() const { return skipped_; }

  // One aggregate per architecture in order of first appearance.
  std::vector<MetricsAggregate> aggregates() const;

  // Columns clip_id,arch,params,mse,psnr,lsd,sisnr,wd; per-clip rows followed
  // by a "mean" and a "std" row for each architecture.
  std::string to_csv() const;
  // One row per architecture: params, reference params, mean and std columns.
  std::string to_table_csv() const;

 private:
  std::vector<MetricsRow> rows_;
  std::vector<std::pair<std::string, std::string>> skipped_;
};

}  // namespace ainr
