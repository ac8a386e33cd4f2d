#include "ainr/fewsound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "ainr/error.hpp"

namespace ainr {

void FewSoundConfig::validate() const {
  if (window < 16) throw ConfigError("FewSound window must be at least 16 samples");
  if (embedding_dim == 0 || stem_channels == 0 || kernel == 0 || weight_encoder_hidden == 0)
    throw ConfigError("FewSound widths must be positive");
  if (kernel % 2 == 0) throw ConfigError("FewSound encoder kernel must be odd");
  if (block_channels.empty()) throw ConfigError("FewSound encoder needs at least one block");
  for (auto c : block_channels)
    if (c == 0) throw ConfigError("FewSound encoder channels must be positive");
  if (window >> block_channels.size() < 1)
    throw ConfigError("FewSound window too short for the encoder's downsampling");
  for (auto h : hyper_hidden)
    if (h == 0) throw ConfigError("FewSound hypernetwork widths must be positive");
  if (epochs == 0 || batch_size == 0) throw ConfigError("epochs and batch size must be positive");
  if (lr < 0.0 || weight_decay < 0.0) throw ConfigError("negative lr or weight decay");
  if (lambda_time < 0.0 || lambda_freq < 0.0) throw ConfigError("loss weights must be non-negative");
  if (sample_rate == 0) throw ConfigError("sample rate must be positive");
  target.validate();
}

double default_meta_lr(Arch target) { return target == Arch::siren ? 1e-6 : 1e-5; }

double FewSoundConfig::meta_lr() const { return lr > 0.0 ? lr : default_meta_lr(target.arch); }

LossConfig FewSoundConfig::loss() const {
  LossConfig c;
  c.lambda_time = lambda_time;
  c.lambda_freq = lambda_freq;
  c.sample_rate = static_cast<double>(sample_rate);
  return c;
}

bool operator==(const FewSoundConfig& a, const FewSoundConfig& b) {
  return a.window == b.window && a.embedding_dim == b.embedding_dim &&
         a.stem_channels == b.stem_channels && a.block_channels == b.block_channels &&
         a.kernel == b.kernel && a.weight_encoder_hidden == b.weight_encoder_hidden &&
         a.hyper_hidden == b.hyper_hidden && a.target == b.target &&
         a.lambda_time == b.lambda_time && a.lambda_freq == b.lambda_freq &&
         a.epochs == b.epochs && a.batch_size == b.batch_size && a.lr == b.lr &&
         a.weight_decay == b.weight_decay && a.warmup_fraction == b.warmup_fraction &&
         a.div_factor == b.div_factor && a.final_div_factor == b.final_div_factor &&
         a.seed == b.seed && a.sample_rate == b.sample_rate;
}

// ---------------------------------------------------------------------------
// Layouts

namespace {

constexpr std::size_t kDownKernel = 4;
constexpr std::size_t kFinalKernel = 3;

class LayoutBuilder {
 public:
  void add(std::string name, Shape shape) {
    const std::size_t n = numel(shape);
    layout_.push_back({std::move(name), offset_, std::move(shape)});
    offset_ += n;
  }
  ParamLayout take() { return std::move(layout_); }

 private:
  ParamLayout layout_;
  std::size_t offset_ = 0;
};

std::size_t total(const ParamLayout& layout) {
  return layout.empty() ? 0 : layout.back().offset + layout.back().size();
}

const ParamBlock& find(const ParamLayout& layout, std::string_view name) {
  for (const auto& b : layout)
    if (b.name == name) return b;
  throw ContractError("unknown parameter block " + std::string(name));
}

}  // namespace

ParamLayout encoder_layout(const FewSoundConfig& c) {
  LayoutBuilder b;
  const std::size_t k = c.kernel;
  b.add("stem.weight", {c.stem_channels, 1, k});
  b.add("stem.bias", {c.stem_channels});
  std::size_t ch = c.stem_channels;
  for (std::size_t i = 0; i < c.block_channels.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    b.add(p + "res1.weight", {ch, ch, k});
    b.add(p + "res1.bias", {ch});
    b.add(p + "res2.weight", {ch, ch, 1});
    b.add(p + "res2.bias", {ch});
    b.add(p + "down.weight", {c.block_channels[i], ch, kDownKernel});
    b.add(p + "down.bias", {c.block_channels[i]});
    ch = c.block_channels[i];
  }
  b.add("final.weight", {ch, ch, kFinalKernel});
  b.add("final.bias", {ch});
  b.add("proj.weight", {c.embedding_dim, ch});
  b.add("proj.bias", {c.embedding_dim});
  return b.take();
}

ParamLayout weight_encoder_layout(const FewSoundConfig& c) {
  const std::size_t p = param_count(c.target);
  LayoutBuilder b;
  b.add("layer0.weight", {c.weight_encoder_hidden, p});
  b.add("layer0.bias", {c.weight_encoder_hidden});
  b.add("layer1.weight", {c.embedding_dim, c.weight_encoder_hidden});
  b.add("layer1.bias", {c.embedding_dim});
  return b.take();
}

ParamLayout hyper_layout(const FewSoundConfig& c) {
  LayoutBuilder b;
  std::size_t in = 2 * c.embedding_dim;
  std::vector<std::size_t> widths = c.hyper_hidden;
  widths.push_back(param_count(c.target));
  for (std::size_t l = 0; l < widths.size(); ++l) {
    b.add("layer" + std::to_string(l) + ".weight", {widths[l], in});
    b.add("layer" + std::to_string(l) + ".bias", {widths[l]});
    in = widths[l];
  }
  return b.take();
}

// ---------------------------------------------------------------------------
// State

namespace {

// Default init of dense and conv layers: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform(const ParamLayout& layout, std::vector<double>& out, std::mt19937_64& rng) {
  out.assign(total(layout), 0.0);
  std::size_t fan_in = 1;
  for (const auto& block : layout) {
    if (block.shape.size() >= 2) fan_in = numel(block.shape) / block.shape[0];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> d(-bound, bound);
    for (std::size_t i = 0; i < block.size(); ++i) out[block.offset + i] = d(rng);
  }
}

}  // namespace

FewSoundState FewSoundState::init(const FewSoundConfig& config) {
  config.validate();
  FewSoundState s;
  s.config = config;
  std::mt19937_64 rng(config.seed);
  init_uniform(encoder_layout(config), s.gamma, rng);
  init_uniform(weight_encoder_layout(config), s.delta, rng);
  const auto hl = hyper_layout(config);
  init_uniform(hl, s.eta, rng);
  // Zero output layer: delta_theta = 0 until training moves it.
  const auto& w = hl[hl.size() - 2];
  std::fill(s.eta.begin() + static_cast<std::ptrdiff_t>(w.offset), s.eta.end(), 0.0);
  s.theta = InrModel::build(config.target, config.seed).flatten();
  return s;
}

void FewSoundState::validate() const {
  config.validate();
  auto check = [](const char* name, std::size_t have, std::size_t want) {
    if (have != want)
      throw ShapeError(std::string("FewSound ") + name + " has " + std::to_string(have) +
                       " values, expected " + std::to_string(want));
  };
  check("gamma", gamma.size(), total(encoder_layout(config)));
  check("delta", delta.size(), total(weight_encoder_layout(config)));
  check("eta", eta.size(), total(hyper_layout(config)));
  check("theta", theta.size(), param_count(config.target));
}

InrModel FewSoundState::universal() const { return InrModel::unflatten(config.target, theta); }

MetaVars bind(Graph& g, const FewSoundState& s, bool trainable) {
  auto make = [&](const std::vector<double>& v) {
    return trainable ? g.parameter(Tensor::vector(v)) : g.constant(Tensor::vector(v));
  };
  return {make(s.gamma), make(s.delta), make(s.eta), make(s.theta)};
}

// ---------------------------------------------------------------------------
// Networks

namespace {

Var block_var(Var flat, const ParamLayout& layout, std::string_view name) {
  const auto& b = find(layout, name);
  return slice(flat, b.offset, b.shape);
}

Var dense(Var x, Var flat, const ParamLayout& layout, const std::string& prefix) {
  return linear(x, block_var(flat, layout, prefix + ".weight"),
                block_var(flat, layout, prefix + ".bias"));
}

Var conv(Var x, Var flat, const ParamLayout& layout, const std::string& prefix,
         std::size_t stride, std::size_t padding) {
  return conv1d(x, block_var(flat, layout, prefix + ".weight"),
                block_var(flat, layout, prefix + ".bias"), stride, padding);
}

void expect_size(Var v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw ShapeError(std::string(what) + ": got " + std::to_string(v.size()) + " values, expected " +
                     std::to_string(n));
}

}  // namespace

Var encode_audio(const FewSoundConfig& c, Var gamma, Var window) {
  if (window.size() != c.window)
    throw ContractError("encode_audio: window has " + std::to_string(window.size()) +
                        " samples, expected " + std::to_string(c.window));
  const auto layout = encoder_layout(c);
  expect_size(gamma, total(layout), "encode_audio: gamma");
  const std::size_t pad = c.kernel / 2;
  Var h = silu(conv(reshape(window, {1, c.window}), gamma, layout, "stem", 1, pad));
  for (std::size_t i = 0; i < c.block_channels.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    Var r = silu(conv(h, gamma, layout, p + "res1", 1, pad));
    r = conv(r, gamma, layout, p + "res2", 1, 0);
    h = silu(add(h, r));
    h = silu(conv(h, gamma, layout, p + "down", 2, 1));
  }
  h = silu(conv(h, gamma, layout, "final", 1, kFinalKernel / 2));
  Var pooled = mean(h, 1);
  Var e = dense(reshape(pooled, {1, pooled.size()}), gamma, layout, "proj");
  return reshape(e, {c.embedding_dim});
}

Var encode_weights(const FewSoundConfig& c, Var delta, Var theta) {
  const auto layout = weight_encoder_layout(c);
  expect_size(delta, total(layout), "encode_weights: delta");
  expect_size(theta, param_count(c.target), "encode_weights: theta");
  Var h = silu(dense(reshape(theta, {1, theta.size()}), delta, layout, "layer0"));
  return reshape(dense(h, delta, layout, "layer1"), {c.embedding_dim});
}

Var predict_update(const FewSoundConfig& c, Var eta, Var audio_embedding, Var weight_embedding) {
  const auto layout = hyper_layout(c);
  expect_size(eta, total(layout), "predict_update: eta");
  expect_size(audio_embedding, c.embedding_dim, "predict_update: audio embedding");
  expect_size(weight_embedding, c.embedding_dim, "predict_update: weight embedding");
  const Var parts[] = {audio_embedding, weight_embedding};
  Var h = reshape(concat(parts), {1, 2 * c.embedding_dim});
  const std::size_t layers = c.hyper_hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    h = dense(h, eta, layout, "layer" + std::to_string(l));
    if (l + 1 < layers) h = silu(h);
  }
  return reshape(h, {param_count(c.target)});
}

std::vector<double> encode_audio(const FewSoundState& s, std::span<const double> window) {
  Graph g;
  const MetaVars v = bind(g, s, false);
  Var w = g.constant(Tensor::vector({window.begin(), window.end()}));
  auto out = encode_audio(s.config, v.gamma, w).values();
  return {out.begin(), out.end()};
}

std::vector<double> encode_weights(const FewSoundState& s) {
  Graph g;
  const MetaVars v = bind(g, s, false);
  auto out = encode_weights(s.config, v.delta, v.theta).values();
  return {out.begin(), out.end()};
}

std::vector<double> predict_update(const FewSoundState& s, std::span<const double> es,
                                   std::span<const double> et) {
  Graph g;
  const MetaVars v = bind(g, s, false);
  Var a = g.constant(Tensor::vector({es.begin(), es.end()}));
  Var b = g.constant(Tensor::vector({et.begin(), et.end()}));
  auto out = predict_update(s.config, v.eta, a, b).values();
  return {out.begin(), out.end()};
}

InrModel adapt(const FewSoundState& s, std::span<const double> window) {
  const auto es = encode_audio(s, window);
  const auto et = encode_weights(s);
  const auto update = predict_update(s, es, et);
  return s.universal().apply_delta(update);
}

// ---------------------------------------------------------------------------
// Meta-training

MetaGradients meta_gradients(const FewSoundState& s, const CombinedLoss& loss,
                             std::span<const CombinedLoss::Target* const> batch) {
  if (batch.empty()) throw ContractError("meta_gradients: empty batch");
  Graph g;
  const MetaVars v = bind(g, s, true);
  const InrModel universal = s.universal();
  const Var times = g.constant(Tensor::vector(time_grid(s.config.window)));
  const Var et = encode_weights(s.config, v.delta, v.theta);

  MetaGradients out;
  Var batch_loss;
  for (const auto* target : batch) {
    Var window = g.constant(Tensor::vector(target->samples));
    Var es = encode_audio(s.config, v.gamma, window);
    Var adapted = add(v.theta, predict_update(s.config, v.eta, es, et));
    Var clip_loss = loss(*target, universal.forward(g, adapted, times));
    out.per_clip.push_back(clip_loss.item());
    batch_loss = batch_loss.valid() ? add(batch_loss, clip_loss) : clip_loss;
  }
  out.loss = batch_loss.item();
  g.backward(batch_loss);
  out.gamma = g.grad(v.gamma).values;
  out.delta = g.grad(v.delta).values;
  out.eta = g.grad(v.eta).values;
  out.theta = g.grad(v.theta).values;
  return out;
}

namespace {

AdamWConfig meta_adam(const FewSoundConfig& c) {
  AdamWConfig a;
  a.lr = c.meta_lr();
  a.weight_decay = c.weight_decay;
  return a;
}

OneCycleSchedule meta_schedule(const FewSoundConfig& c, std::size_t total_steps) {
  OneCycleSchedule s;
  s.max_lr = c.meta_lr();
  s.total_steps = total_steps;
  s.warmup_fraction = c.warmup_fraction;
  s.div_factor = c.div_factor;
  s.final_div_factor = c.final_div_factor;
  s.validate();
  return s;
}

}  // namespace

MetaOptimizer::MetaOptimizer(const FewSoundConfig& config, std::size_t total_steps)
    : adam_(meta_adam(config)), schedule_(meta_schedule(config, total_steps)) {}

double MetaOptimizer::current_lr() const {
  return schedule_.lr(std::min(step_, schedule_.total_steps));
}

void MetaOptimizer::step(FewSoundState& s, const MetaGradients& grads) {
  adam_.set_lr(current_lr());
  const ParamRef refs[] = {{"gamma", s.gamma, grads.gamma},
                           {"delta", s.delta, grads.delta},
                           {"eta", s.eta, grads.eta},
                           {"theta", s.theta, grads.theta}};
  adam_.step(refs);
  ++step_;
}

MetaTrainResult meta_train(const std::vector<AudioClip>& clips, const FewSoundConfig& config,
                           const EpochCallback& on_epoch) {
  config.validate();
  if (clips.empty()) throw ContractError("meta_train: no clips");
  const CombinedLoss loss(config.loss());
  std::vector<CombinedLoss::Target> targets;
  for (const auto& clip : clips) {
    AudioClip c = resample(clip, config.sample_rate);
    if (c.samples.size() < config.window)
      throw ContractError("meta_train: clip '" + c.source_id + "' has " +
                          std::to_string(c.samples.size()) + " samples, window is " +
                          std::to_string(config.window));
    c.samples.resize(config.window);
    targets.push_back(loss.prepare(std::move(c.samples)));
  }

  const std::size_t batch = std::min(config.batch_size, targets.size());
  const std::size_t per_epoch = (targets.size() + batch - 1) / batch;
  MetaTrainResult result{FewSoundState::init(config), {}};
  MetaOptimizer opt(config, config.epochs * per_epoch);
  std::mt19937_64 rng(config.seed ^ 0xA5A5A5A5ULL);
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      std::vector<const CombinedLoss::Target*> members;
      for (std::size_t i = b * batch; i < std::min(targets.size(), (b + 1) * batch); ++i)
        members.push_back(&targets[order[i]]);
      MetaGradients grads;
      try {
        grads = meta_gradients(result.state, loss, members);
        if (!std::isfinite(grads.loss)) throw NonFiniteError("non-finite meta-loss");
        opt.step(result.state, grads);
      } catch (const Error& e) {
        if (!dynamic_cast<const NonFiniteError*>(&e) && !dynamic_cast<const DomainError*>(&e))
          throw;
        throw NonFiniteError("meta_train: epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(b) + ": " + e.what());
      }
      epoch_loss += grads.loss;
    }
    epoch_loss /= static_cast<double>(targets.size());
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Overlap-add

std::vector<std::size_t> window_starts(std::size_t length, std::size_t window) {
  if (window < 2) throw ConfigError("window must be at least 2 samples");
  if (length <= window) return {0};
  const std::size_t hop = window / 2;
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window < length; s += hop) starts.push_back(s);
  if (starts.back() != length - window) starts.push_back(length - window);
  return starts;
}

namespace {

std::vector<double> crossfade(std::size_t window) {
  std::vector<double> fade(window);
  for (std::size_t i = 0; i < window; ++i) {
    const double s = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) /
                              static_cast<double>(window));
    fade[i] = s * s;
  }
  return fade;
}

// Per-sample sum of raw crossfade weights over all windows.
std::vector<double> weight_field(std::size_t length, std::size_t window,
                                 const std::vector<double>& fade) {
  std::vector<double> weight(length, 0.0);
  for (std::size_t start : window_starts(length, window))
    for (std::size_t i = 0; i < window; ++i) weight[start + i] += fade[i];
  return weight;
}

}  // namespace

std::vector<double> overlap_add(std::span<const double> signal, std::size_t window,
                                const WindowRenderer& render) {
  if (signal.empty()) throw ContractError("overlap_add: empty signal");
  const std::size_t n = signal.size();
  std::vector<double> padded(signal.begin(), signal.end());
  if (padded.size() < window) padded.resize(window, 0.0);
  const std::size_t m = padded.size();

  const auto fade = crossfade(window);
  const auto weight = weight_field(m, window, fade);
  std::vector<double> out(m, 0.0);
  for (std::size_t start : window_starts(m, window)) {
    const auto piece = render(std::span<const double>(padded).subspan(start, window), start);
    if (piece.size() != window)
      throw ShapeError("overlap_add: renderer returned " + std::to_string(piece.size()) +
                       " samples, expected " + std::to_string(window));
    for (std::size_t i = 0; i < window; ++i)
      out[start + i] += fade[i] / weight[start + i] * piece[i];
  }
  out.resize(n);
  return out;
}

std::vector<double> crossfade_weight_sum(std::size_t length, std::size_t window) {
  if (length == 0) throw ContractError("crossfade_weight_sum: empty signal");
  const std::size_t m = std::max(length, window);
  const auto fade = crossfade(window);
  const auto weight = weight_field(m, window, fade);
  std::vector<double> sum(m, 0.0);
  for (std::size_t start : window_starts(m, window))
    for (std::size_t i = 0; i < window; ++i) sum[start + i] += fade[i] / weight[start + i];
  sum.resize(length);
  return sum;
}

std::vector<double> reconstruct_long(const FewSoundState& s, std::span<const double> clip) {
  const auto times = time_grid(s.config.window);
  return overlap_add(clip, s.config.window, [&](std::span<const double> w, std::size_t) {
    return adapt(s, w).render(times);
  });
}

}  // namespace ainr
