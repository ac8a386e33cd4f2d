#include "ainr/optim.hpp"

#include <cmath>
#include <numbers>

#include "ainr/error.hpp"

namespace ainr {

void AdamWConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("AdamW lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("AdamW betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("AdamW eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("AdamW weight decay must be non-negative");
}

AdamW::AdamW(AdamWConfig config) : config_(config) { config_.validate(); }

void AdamW::set_lr(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("AdamW lr must be positive");
  config_.lr = lr;
}

void AdamW::step(std::span<const ParamRef> params) {
  if (moments_.empty()) {
    for (const auto& p : params)
      moments_.push_back({p.name, std::vector<double>(p.value.size(), 0.0),
                          std::vector<double>(p.value.size(), 0.0)});
  }
  if (params.size() != moments_.size())
    throw ShapeError("AdamW: expected " + std::to_string(moments_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.value.size() != moments_[i].m.size() || p.grad.size() != p.value.size())
      throw ShapeError("AdamW: size mismatch for parameter '" + p.name + "'");
    for (std::size_t j = 0; j < p.grad.size(); ++j)
      if (!std::isfinite(p.grad[j]))
        throw NonFiniteError("non-finite gradient in parameter '" + p.name + "' at index " +
                             std::to_string(j));
  }

  ++t_;
  const double lr = config_.lr;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = lr * config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value;
    auto grad = params[i].grad;
    auto& m = moments_[i].m;
    auto& v = moments_[i].v;
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      value[j] -= decay * value[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
    }
  }
}

void OneCycleSchedule::validate() const {
  if (!(max_lr > 0.0)) throw ConfigError("one-cycle max_lr must be positive");
  if (total_steps < 1) throw ConfigError("one-cycle total_steps must be >= 1");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
    throw ConfigError("one-cycle warmup_fraction must lie in [0, 1)");
  if (!(div_factor > 0.0) || !(final_div_factor > 0.0))
    throw ConfigError("one-cycle division factors must be positive");
}

std::size_t OneCycleSchedule::warmup_steps() const {
  return static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
}

double OneCycleSchedule::lr(std::size_t step) const {
  if (step > total_steps)
    throw ContractError("one-cycle step " + std::to_string(step) + " beyond total " +
                        std::to_string(total_steps));
  const std::size_t w = warmup_steps();
  // Boundaries are returned verbatim so they are exact.
  if (step == total_steps) return final_lr();
  if (step == w) return max_lr;
  if (step == 0) return initial_lr();
  constexpr double pi = std::numbers::pi;
  if (step < w) {
    const double s = static_cast<double>(step) / static_cast<double>(w);
    return initial_lr() + (max_lr - initial_lr()) * 0.5 * (1.0 - std::cos(pi * s));
  }
  const double s = static_cast<double>(step - w) / static_cast<double>(total_steps - w);
  return final_lr() + (max_lr - final_lr()) * 0.5 * (1.0 + std::cos(pi * s));
}

}  // namespace ainr
