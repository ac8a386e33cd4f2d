#include "ainr/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ainr/error.hpp"
#include "ainr/io_util.hpp"
#include "ainr/optim.hpp"

namespace ainr {

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (lr < 0.0 || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (lambda_time < 0.0 || lambda_freq < 0.0) throw ConfigError("loss weights must be non-negative");
  metric_stft.validate();
}

double default_lr(Arch arch) { return arch == Arch::kan ? 5e-3 : 1e-4; }

double TrainConfig::lr_for(Arch arch) const { return lr > 0.0 ? lr : default_lr(arch); }

LossConfig TrainConfig::loss(std::uint32_t sample_rate) const {
  LossConfig c;
  c.lambda_time = lambda_time;
  c.lambda_freq = lambda_freq;
  c.sample_rate = static_cast<double>(sample_rate);
  return c;
}

FitResult fit_inr(const AudioClip& clip, const InrConfig& inr, const TrainConfig& train,
                  const StepCallback& on_step) {
  if (clip.samples.empty()) throw ContractError("fit_inr: empty clip");
  clip.validate();
  train.validate();
  const auto start = std::chrono::steady_clock::now();

  InrModel model = InrModel::build(inr, train.seed);
  const CombinedLoss loss_fn(train.loss(clip.sample_rate));
  const auto target = loss_fn.prepare(clip.samples);
  const Tensor times = Tensor::vector(time_grid(clip.samples.size()));

  AdamWConfig opt_config;
  opt_config.lr = train.lr_for(inr.arch);
  opt_config.weight_decay = train.weight_decay;
  AdamW opt(opt_config);

  std::vector<double> params = model.flatten();
  FitResult result{model, {}, {}, 0.0};
  result.loss_trace.reserve(train.steps);
  for (std::size_t step = 0; step < train.steps; ++step) {
    Graph g(train.precision);
    std::vector<double> grad;
    double value = 0.0;
    try {
      Var p = g.parameter(Tensor::vector(params));
      Var y = model.forward(g, p, g.constant(times));
      Var loss = loss_fn(target, y);
      value = loss.item();
      g.backward(loss);
      grad = g.grad(p).values;
    } catch (const DomainError& e) {
      throw NonFiniteError("fit_inr: step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(value))
      throw NonFiniteError("fit_inr: non-finite loss at step " + std::to_string(step));
    result.loss_trace.push_back(value);
    try {
      const ParamRef ref{"inr", params, grad};
      opt.step(std::span<const ParamRef>(&ref, 1));
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("fit_inr: step " + std::to_string(step) + ": " + e.what());
    }
    if (on_step) on_step(step, value);
  }

  result.model = InrModel::unflatten(model.config(), params);
  result.metrics = evaluate(result.model, clip, train.metric_stft);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

MetricValues evaluate(const InrModel& model, const AudioClip& clip,
                      const StftResolution& lsd_res) {
  const auto rendered = model.render(time_grid(clip.samples.size()));
  return compute_metrics(clip.samples, rendered, lsd_res);
}

void write_trace_csv(const std::filesystem::path& path, std::span<const double> trace, double lr) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,lr\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << ',' << lr << '\n';
  write_file_atomic(path, os.str());
}

MetricsReport compare_archs(const std::vector<AudioClip>& clips,
                            const std::vector<InrConfig>& configs, const TrainConfig& train,
                            std::size_t workers) {
  if (clips.empty()) throw ContractError("compare_archs: no clips");
  if (configs.empty()) throw ContractError("compare_archs: no configurations");
  const std::size_t jobs = clips.size() * configs.size();

  struct Slot {
    bool ok = false;
    MetricsRow row;
    std::string error;
  };
  std::vector<Slot> slots(jobs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const auto& clip = clips[j / configs.size()];
      const auto& config = configs[j % configs.size()];
      auto& slot = slots[j];
      slot.row.clip_id = clip.source_id;
      slot.row.arch = std::string(arch_name(config.arch));
      slot.row.params = param_count(config);
      try {
        slot.row.values = fit_inr(clip, config, train).metrics;
        slot.ok = true;
      } catch (const Error& e) {
        slot.error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  MetricsReport report;
  for (auto& slot : slots) {
    if (slot.ok)
      report.add(std::move(slot.row));
    else
      report.skip(slot.row.clip_id + " [" + slot.row.arch + "]", slot.error);
  }
  return report;
}

double nonincreasing_window_fraction(std::span<const double> trace, std::size_t window) {
  if (window == 0) throw ConfigError("window must be positive");
  const std::size_t blocks = trace.size() / window;
  if (blocks < 2) throw ContractError("trace shorter than two windows");
  std::vector<double> means(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < window; ++i) means[b] += trace[b * window + i];
    means[b] /= static_cast<double>(window);
  }
  std::size_t good = 0;
  for (std::size_t b = 1; b < blocks; ++b)
    if (means[b] <= means[b - 1]) ++good;
  return static_cast<double>(good) / static_cast<double>(blocks - 1);
}

}  // namespace ainr
