#pragma once

// Hypernetwork that specialises a universal INR to one audio window:
//   E_S = E(window; gamma), E_theta = G(theta; delta),
//   delta_theta = H([E_S, E_theta]; eta), theta' = theta + delta_theta.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ainr/audio.hpp"
#include "ainr/inr.hpp"
#include "ainr/loss.hpp"
#include "ainr/optim.hpp"

namespace ainr {

struct FewSoundConfig {
  std::size_t window = 32768;
  std::size_t embedding_dim = 64;  // shared by E_S and E_theta

  // Audio encoder: stem conv, one residual block per entry (each halves the
  // time axis and maps to the listed channel count), final conv, mean-pool,
  // linear projection.
  std::size_t stem_channels = 16;
  std::vector<std::size_t> block_channels{16, 32, 32, 64};
  std::size_t kernel = 7;

  std::size_t weight_encoder_hidden = 256;
  std::vector<std::size_t> hyper_hidden{256};

  InrConfig target;

  double lambda_time = 1.0;
  double lambda_freq = 1.0;
  std::size_t epochs = 300;
  std::size_t batch_size = 4;
  double lr = 0.0;  // 0 selects default_meta_lr(target.arch)
  double weight_decay = 0.01;
  double warmup_fraction = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  std::uint64_t seed = 0;
  std::uint32_t sample_rate = kDefaultSampleRate;

  void validate() const;
  double meta_lr() const;
  LossConfig loss() const;
};

bool operator==(const FewSoundConfig& a, const FewSoundConfig& b);

// 1e-5, or 1e-6 for a SIREN target.
double default_meta_lr(Arch target);

ParamLayout encoder_layout(const FewSoundConfig& config);         // gamma
ParamLayout weight_encoder_layout(const FewSoundConfig& config);  // delta
ParamLayout hyper_layout(const FewSoundConfig& config);           // eta

struct FewSoundState {
  FewSoundConfig config;
  std::vector<double> gamma;  // audio encoder
  std::vector<double> delta;  // weight encoder
  std::vector<double> eta;    // hypernetwork; final layer starts at zero
  std::vector<double> theta;  // universal INR weights

  static FewSoundState init(const FewSoundConfig& config);
  void validate() const;
  InrModel universal() const;
};

// The four parameter groups bound to one graph.
struct MetaVars {
  Var gamma, delta, eta, theta;
};
MetaVars bind(Graph& graph, const FewSoundState& state, bool trainable);

// window [config.window] -> [embedding_dim]
Var encode_audio(const FewSoundConfig& config, Var gamma, Var window);
// theta [P] -> [embedding_dim]
Var encode_weights(const FewSoundConfig& config, Var delta, Var theta);
// -> delta_theta [P]
Var predict_update(const FewSoundConfig& config, Var eta, Var audio_embedding,
                   Var weight_embedding);

std::vector<double> encode_audio(const FewSoundState& state, std::span<const double> window);
std::vector<double> encode_weights(const FewSoundState& state);
std::vector<double> predict_update(const FewSoundState& state,
                                   std::span<const double> audio_embedding,
                                   std::span<const double> weight_embedding);
// f_{theta + delta_theta} for this window.
InrModel adapt(const FewSoundState& state, std::span<const double> window);

struct MetaGradients {
  double loss = 0.0;  // sum over the batch
  std::vector<double> per_clip;
  std::vector<double> gamma, delta, eta, theta;
};

// Gradients of sum_i L(f_{theta + delta_theta_i}) over the batch.
MetaGradients meta_gradients(const FewSoundState& state, const CombinedLoss& loss,
                             std::span<const CombinedLoss::Target* const> batch);

// AdamW over all four groups with a one-cycle lr.
class MetaOptimizer {
 public:
  MetaOptimizer(const FewSoundConfig& config, std::size_t total_steps);
  void step(FewSoundState& state, const MetaGradients& grads);
  double current_lr() const;
  std::size_t steps() const { return step_; }

 private:
  AdamW adam_;
  OneCycleSchedule schedule_;
  std::size_t step_ = 0;
};

struct MetaTrainResult {
  FewSoundState state;
  std::vector<double> epoch_losses;  // mean per-clip loss of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Clips are resampled to config.sample_rate and cut to their first
// config.window samples; shorter clips are rejected. Batches are drawn from a
// seeded shuffle each epoch.
MetaTrainResult meta_train(const std::vector<AudioClip>& clips, const FewSoundConfig& config,
                           const EpochCallback& on_epoch = {});

// Produces the reconstruction of one window. `start` is the window's offset in
// the (zero-padded) signal.
using WindowRenderer =
    std::function<std::vector<double>(std::span<const double> window, std::size_t start)>;

// Window offsets: hop window/2, final window right-aligned.
std::vector<std::size_t> window_starts(std::size_t length, std::size_t window);

// Overlap-add with sin^2 crossfades whose per-sample weights are normalised
// to sum to one. Signals shorter than one window are zero-padded, rendered
// and trimmed.
std::vector<double> overlap_add(std::span<const double> signal, std::size_t window,
                                const WindowRenderer& render);

// Per-sample sum of the normalised crossfade weights.
std::vector<double> crossfade_weight_sum(std::size_t length, std::size_t window);

std::vector<double> reconstruct_long(const FewSoundState& state, std::span<const double> clip);

}  // namespace ainr
