#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ainr/audio.hpp"
#include "ainr/inr.hpp"
#include "ainr/loss.hpp"
#include "ainr/metrics.hpp"

namespace ainr {

struct TrainConfig {
  std::size_t steps = 10000;
  double lr = 0.0;  // 0 selects default_lr(arch)
  double weight_decay = 0.01;
  double lambda_time = 1.0;
  double lambda_freq = 1.0;
  std::uint64_t seed = 0;  // model initialisation
  Precision precision = Precision::f64;
  StftResolution metric_stft = lsd_resolution();

  void validate() const;
  double lr_for(Arch arch) const;
  LossConfig loss(std::uint32_t sample_rate) const;
};

// 5e-3 for KAN, 1e-4 for the MLP families.
double default_lr(Arch arch);

struct FitResult {
  InrModel model;
  std::vector<double> loss_trace;  // one entry per step, before the update
  MetricValues metrics;
  double seconds = 0.0;
};

// Called after every step with (step index, loss).
using StepCallback = std::function<void(std::size_t, double)>;

// Full-batch fit of one clip on the time grid [-1, 1] with constant lr.
// Throws NonFiniteError naming the step when the loss or a gradient blows up.
FitResult fit_inr(const AudioClip& clip, const InrConfig& inr, const TrainConfig& train,
                  const StepCallback& on_step = {});

// Renders the model on the clip's time grid and scores it.
MetricValues evaluate(const InrModel& model, const AudioClip& clip,
                      const StftResolution& lsd_res = lsd_resolution());

// Writes step,loss,lr rows.
void write_trace_csv(const std::filesystem::path& path, std::span<const double> trace, double lr);

// Fits every (clip, config) pair. Work is spread over `workers` threads;
// rows are collected clip-major, config-minor regardless of scheduling.
MetricsReport compare_archs(const std::vector<AudioClip>& clips,
                            const std::vector<InrConfig>& configs, const TrainConfig& train,
                            std::size_t workers = 1);

// Means of consecutive non-overlapping windows of the trace; returns the
// fraction of window-to-window transitions that do not increase.
double nonincreasing_window_fraction(std::span<const double> trace, std::size_t window = 100);

}  // namespace ainr
