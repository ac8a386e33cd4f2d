#pragma once

// Dense tensors and a tape-style reverse-mode autodiff engine.
//
// A Graph owns every value produced during one forward pass. Operations append
// nodes; parents always have smaller indices than their children, so backward
// is a single reverse sweep over the node list. Graphs are meant to be rebuilt
// for every training step.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ainr {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Plain value array. No gradient bookkeeping.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// f32 rounds every recorded value through float. It is a numerics mode, not a
// speed mode: gradient-check tolerances assume f64.
enum class Precision { f64, f32 };

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const;
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Shape& shape() const;
  std::size_t size() const;
  std::span<const double> values() const;
  double item() const;
  Tensor tensor() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  // Receives the node's accumulated adjoint. Implementations add into their
  // parents' buffers via grad_buffer().
  using BackwardFn = std::function<void(Graph&, std::span<const double> upstream)>;

  explicit Graph(Precision precision = Precision::f64) : precision_(precision) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var parameter(Tensor t);
  Var constant(Tensor t);

  // Appends a computed node. `backward` is dropped when no parent requires
  // gradients. Throws DomainError if any value is non-finite.
  Var record(std::string_view tag, Shape shape, std::vector<double> values,
             std::span<const Var> parents, BackwardFn backward);
  Var record(std::string_view tag, Shape shape, std::vector<double> values,
             std::initializer_list<Var> parents, BackwardFn backward) {
    return record(tag, std::move(shape), std::move(values),
                  std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
  }

  bool requires_grad(Var v) const;
  const Shape& shape(Var v) const;
  std::span<const double> value(Var v) const;
  std::string_view tag(Var v) const;
  std::span<const std::size_t> parents(Var v) const;

  // Adjoint buffer of `v`, zero-initialised on first access.
  std::span<double> grad_buffer(Var v);

  // Single reverse sweep from a scalar loss. A graph supports exactly one
  // backward call; a second call throws ContractError.
  void backward(Var loss);

  // Gradient of the last backward w.r.t. `v`; zeros if `v` was unreachable.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  Precision precision() const { return precision_; }

 private:
  struct Node {
    std::string_view tag;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push_leaf(Tensor t, bool requires_grad);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  Precision precision_;
  bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Operations. All inputs must live on the same graph.

Var matmul(Var a, Var b);                  // [m,k] x [k,n] -> [m,n]
Var linear(Var x, Var weight, std::optional<Var> bias = std::nullopt);  // x W^T + b

enum class UnaryOp { sin, cos, exp, log, abs, square, sqrt, relu, silu, negate, scale, shift };
std::string_view name(UnaryOp op);

// `param` is the factor for scale and the offset for shift; ignored otherwise.
Var unary(UnaryOp op, Var a, double param = 0.0);
inline Var sin(Var a) { return unary(UnaryOp::sin, a); }
inline Var cos(Var a) { return unary(UnaryOp::cos, a); }
inline Var exp(Var a) { return unary(UnaryOp::exp, a); }
inline Var log(Var a) { return unary(UnaryOp::log, a); }
inline Var abs(Var a) { return unary(UnaryOp::abs, a); }
inline Var square(Var a) { return unary(UnaryOp::square, a); }
inline Var sqrt(Var a) { return unary(UnaryOp::sqrt, a); }
inline Var relu(Var a) { return unary(UnaryOp::relu, a); }
inline Var silu(Var a) { return unary(UnaryOp::silu, a); }
inline Var negate(Var a) { return unary(UnaryOp::negate, a); }
inline Var scale(Var a, double factor) { return unary(UnaryOp::scale, a, factor); }
inline Var shift(Var a, double offset) { return unary(UnaryOp::shift, a, offset); }

// `b` must match `a` exactly or match its trailing axis (bias broadcast).
enum class BinaryOp { add, sub, mul, div };
std::string_view name(BinaryOp op);
Var binary(BinaryOp op, Var a, Var b);
inline Var add(Var a, Var b) { return binary(BinaryOp::add, a, b); }
inline Var sub(Var a, Var b) { return binary(BinaryOp::sub, a, b); }
inline Var mul(Var a, Var b) { return binary(BinaryOp::mul, a, b); }
inline Var div(Var a, Var b) { return binary(BinaryOp::div, a, b); }

enum class ReduceOp { sum, mean };
Var reduce(ReduceOp op, Var a, std::optional<std::size_t> axis = std::nullopt);
inline Var sum(Var a, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceOp::sum, a, axis);
}
inline Var mean(Var a, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceOp::mean, a, axis);
}

Var reshape(Var a, Shape shape);
// Contiguous window of the flattened values of `a`.
Var slice(Var a, std::size_t offset, Shape shape);
// Flattens and joins; result is 1-D.
Var concat(std::span<const Var> parts);

// x: [C_in, T], weight: [C_out, C_in, K], bias: [C_out] -> [C_out, T_out],
// T_out = (T + 2*padding - K) / stride + 1 (zero padding).
Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

using ScalarFn = std::function<Var(Graph&, std::span<const Var>)>;

struct GradCheckOptions {
  double step = 1e-6;
  // 0 checks every coordinate, otherwise a seeded random subset per input.
  std::size_t coords_per_input = 0;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error.
  double denominator_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Compares backward() against central differences (f(x+h)-f(x-h))/2h.
GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace ainr
