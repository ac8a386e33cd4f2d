#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ainr {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

// One named parameter tensor handed to the optimizer for a step.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<const double> grad;
};

// Moments of one parameter tensor.
struct AdamWMoments {
  std::string name;
  std::vector<double> m;
  std::vector<double> v;
};

// AdamW with decoupled weight decay:
//   p <- p - lr*wd*p
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// The parameter list (names and sizes) is fixed by the first step.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {});

  // Validates every gradient before touching any parameter. Throws
  // NonFiniteError naming the parameter, ShapeError on size mismatch.
  void step(std::span<const ParamRef> params);

  void set_lr(double lr);
  double lr() const { return config_.lr; }
  const AdamWConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  const std::vector<AdamWMoments>& moments() const { return moments_; }

 private:
  AdamWConfig config_;
  std::uint64_t t_ = 0;
  std::vector<AdamWMoments> moments_;
};

// Cosine warm-up from max_lr/div_factor to max_lr over the first
// floor(warmup_fraction * total_steps) steps, then cosine annealing to
// max_lr/final_div_factor at step total_steps.
struct OneCycleSchedule {
  double max_lr = 1e-3;
  std::size_t total_steps = 1;
  double warmup_fraction = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  void validate() const;
  std::size_t warmup_steps() const;
  double initial_lr() const { return max_lr / div_factor; }
  double final_lr() const { return max_lr / final_div_factor; }
  // Throws ContractError when step > total_steps.
  double lr(std::size_t step) const;
};

}  // namespace ainr
