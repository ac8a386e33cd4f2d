#include "ainr/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "ainr/error.hpp"

namespace ainr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(std::span<const double> v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::span<double> v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Graph& common_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
  return a.graph();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  for (auto d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  if (numel(shape) != values.size())
    throw ShapeError("shape " + to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

// ---------------------------------------------------------------------------

Graph& Var::graph() const {
  if (!graph_) throw ContractError("use of an empty Var");
  return *graph_;
}
const Shape& Var::shape() const { return graph().shape(*this); }
std::size_t Var::size() const { return values().size(); }
std::span<const double> Var::values() const { return graph().value(*this); }
double Var::item() const {
  auto v = values();
  if (v.size() != 1) throw ContractError("item() on non-scalar of shape " + to_string(shape()));
  return v[0];
}
Tensor Var::tensor() const {
  auto v = values();
  return Tensor(shape(), std::vector<double>(v.begin(), v.end()));
}

Var Graph::parameter(Tensor t) { return push_leaf(std::move(t), true); }
Var Graph::constant(Tensor t) { return push_leaf(std::move(t), false); }

Var Graph::push_leaf(Tensor t, bool requires_grad) {
  if (t.values.empty()) throw ShapeError("empty tensor");
  if (precision_ == Precision::f32)
    for (auto& x : t.values) x = static_cast<float>(x);
  Node n;
  n.tag = requires_grad ? "parameter" : "constant";
  n.shape = std::move(t.shape);
  n.value = std::move(t.values);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(std::string_view tag, Shape shape, std::vector<double> values,
                  std::span<const Var> parents, BackwardFn backward) {
  if (numel(shape) != values.size())
    throw ShapeError(std::string(tag) + ": shape " + to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  if (precision_ == Precision::f32)
    for (auto& x : values) x = static_cast<float>(x);
  for (double x : values)
    if (!std::isfinite(x)) throw DomainError(std::string(tag) + ": non-finite result");
  Node n;
  n.tag = tag;
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (&p.graph() != this) throw ContractError(std::string(tag) + ": parent from another graph");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Graph::Node& Graph::node(Var v) const {
  if (&v.graph() != this || v.id() >= nodes_.size())
    throw ContractError("Var does not belong to this graph");
  return nodes_[v.id()];
}

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }
const Shape& Graph::shape(Var v) const { return node(v).shape; }
std::span<const double> Graph::value(Var v) const { return node(v).value; }
std::string_view Graph::tag(Var v) const { return node(v).tag; }
std::span<const std::size_t> Graph::parents(Var v) const { return node(v).parents; }

std::span<double> Graph::grad_buffer(Var v) {
  node(v);
  auto& n = nodes_[v.id()];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  const auto& ln = node(loss);
  if (ln.value.size() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + to_string(ln.shape));
  if (backward_done_) throw ContractError("backward already ran on this graph");
  backward_done_ = true;
  if (!ln.requires_grad) return;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Tensor Graph::grad(Var v) const {
  const auto& n = node(v);
  if (n.grad.empty()) return Tensor::zeros(n.shape);
  return Tensor(n.shape, n.grad);
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw ShapeError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out(m * n);
  as_matrix(std::span<double>(out), m, n).noalias() =
      as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  return g.record("matmul", {m, n}, std::move(out), {a, b},
                  [a, b, m, k, n](Graph& g, std::span<const double> up) {
                    auto dc = as_matrix(up, m, n);
                    if (g.requires_grad(a))
                      as_matrix(g.grad_buffer(a), m, k).noalias() +=
                          dc * as_matrix(g.value(b), k, n).transpose();
                    if (g.requires_grad(b))
                      as_matrix(g.grad_buffer(b), k, n).noalias() +=
                          as_matrix(g.value(a), m, k).transpose() * dc;
                  });
}

Var linear(Var x, Var weight, std::optional<Var> bias) {
  Graph& g = common_graph(x, weight);
  const auto& sx = x.shape();
  const auto& sw = weight.shape();
  if (sx.size() != 2 || sw.size() != 2 || sx[1] != sw[1])
    throw ShapeError("linear: input " + to_string(sx) + " incompatible with weight " +
                     to_string(sw));
  const std::size_t rows = sx[0], in = sx[1], out_dim = sw[0];
  if (bias) {
    common_graph(x, *bias);
    if (bias->shape() != Shape{out_dim})
      throw ShapeError("linear: bias " + to_string(bias->shape()) + " for " +
                       std::to_string(out_dim) + " outputs");
  }
  std::vector<double> out(rows * out_dim);
  auto y = as_matrix(std::span<double>(out), rows, out_dim);
  y.noalias() = as_matrix(x.values(), rows, in) * as_matrix(weight.values(), out_dim, in).transpose();
  if (bias) {
    auto b = bias->values();
    Eigen::Map<const Eigen::RowVectorXd> bv(b.data(), static_cast<Eigen::Index>(out_dim));
    y.rowwise() += bv;
  }
  std::vector<Var> parents{x, weight};
  if (bias) parents.push_back(*bias);
  return g.record(
      "linear", {rows, out_dim}, std::move(out), parents,
      [x, weight, bias, rows, in, out_dim](Graph& g, std::span<const double> up) {
        auto dy = as_matrix(up, rows, out_dim);
        if (g.requires_grad(x))
          as_matrix(g.grad_buffer(x), rows, in).noalias() +=
              dy * as_matrix(g.value(weight), out_dim, in);
        if (g.requires_grad(weight))
          as_matrix(g.grad_buffer(weight), out_dim, in).noalias() +=
              dy.transpose() * as_matrix(g.value(x), rows, in);
        if (bias && g.requires_grad(*bias)) {
          // Plain loop: Eigen's vectorised column sum peels by pointer
          // alignment, so its rounding would depend on the heap layout.
          auto db = g.grad_buffer(*bias);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out_dim; ++o) db[o] += up[r * out_dim + o];
        }
      });
}

std::string_view name(UnaryOp op) {
  switch (op) {
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::abs: return "abs";
    case UnaryOp::square: return "square";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::relu: return "relu";
    case UnaryOp::silu: return "silu";
    case UnaryOp::negate: return "negate";
    case UnaryOp::scale: return "scale";
    case UnaryOp::shift: return "shift";
  }
  return "?";
}

Var unary(UnaryOp op, Var a, double param) {
  Graph& g = a.graph();
  auto x = a.values();
  std::vector<double> y(x.size());
  switch (op) {
    case UnaryOp::sin: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::sin(v); }); break;
    case UnaryOp::cos: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::cos(v); }); break;
    case UnaryOp::exp: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::exp(v); }); break;
    case UnaryOp::log:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0))
          throw DomainError("log of non-positive value " + std::to_string(x[i]) + " at index " +
                            std::to_string(i));
        y[i] = std::log(x[i]);
      }
      break;
    case UnaryOp::abs: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::abs(v); }); break;
    case UnaryOp::square: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v * v; }); break;
    case UnaryOp::sqrt:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) throw DomainError("sqrt of negative value at index " + std::to_string(i));
        y[i] = std::sqrt(x[i]);
      }
      break;
    case UnaryOp::relu: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; }); break;
    case UnaryOp::silu: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v * sigmoid(v); }); break;
    case UnaryOp::negate: std::transform(x.begin(), x.end(), y.begin(), [](double v) { return -v; }); break;
    case UnaryOp::scale: std::transform(x.begin(), x.end(), y.begin(), [param](double v) { return v * param; }); break;
    case UnaryOp::shift: std::transform(x.begin(), x.end(), y.begin(), [param](double v) { return v + param; }); break;
  }
  Shape shape = a.shape();
  // Output node id is known only after record(); sqrt and exp reuse their
  // outputs, so they look them up through `self`.
  auto self = std::make_shared<std::size_t>(0);
  Var out = g.record(name(op), shape, std::move(y), {a},
                     [a, op, param, self](Graph& g, std::span<const double> up) {
                       if (!g.requires_grad(a)) return;
                       auto x = g.value(a);
                       auto y = g.value(Var(&g, *self));
                       auto dx = g.grad_buffer(a);
                       const std::size_t n = x.size();
                       switch (op) {
                         case UnaryOp::sin: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i] * std::cos(x[i]); break;
                         case UnaryOp::cos: for (std::size_t i = 0; i < n; ++i) dx[i] -= up[i] * std::sin(x[i]); break;
                         case UnaryOp::exp: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i] * y[i]; break;
                         case UnaryOp::log: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i] / x[i]; break;
                         case UnaryOp::abs:
                           for (std::size_t i = 0; i < n; ++i)
                             dx[i] += up[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
                           break;
                         case UnaryOp::square: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i] * 2.0 * x[i]; break;
                         case UnaryOp::sqrt:
                           // derivative at 0 is taken as 0
                           for (std::size_t i = 0; i < n; ++i)
                             if (y[i] > 0.0) dx[i] += up[i] * 0.5 / y[i];
                           break;
                         case UnaryOp::relu: for (std::size_t i = 0; i < n; ++i) if (x[i] > 0.0) dx[i] += up[i]; break;
                         case UnaryOp::silu:
                           for (std::size_t i = 0; i < n; ++i) {
                             double s = sigmoid(x[i]);
                             dx[i] += up[i] * s * (1.0 + x[i] * (1.0 - s));
                           }
                           break;
                         case UnaryOp::negate: for (std::size_t i = 0; i < n; ++i) dx[i] -= up[i]; break;
                         case UnaryOp::scale: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i] * param; break;
                         case UnaryOp::shift: for (std::size_t i = 0; i < n; ++i) dx[i] += up[i]; break;
                       }
                     });
  *self = out.id();
  return out;
}

std::string_view name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
  }
  return "?";
}

Var binary(BinaryOp op, Var a, Var b) {
  Graph& g = common_graph(a, b);
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const bool same = sa == sb;
  const bool trailing = sa.size() >= 2 && sb.size() == 1 && sb[0] == sa.back();
  if (!same && !trailing)
    throw ShapeError(std::string(name(op)) + ": incompatible shapes " + to_string(sa) + " and " +
                     to_string(sb));
  auto x = a.values();
  auto z = b.values();
  const std::size_t n = x.size(), nb = z.size();
  if (op == BinaryOp::div)
    for (std::size_t j = 0; j < nb; ++j)
      if (z[j] == 0.0) throw DomainError("div: division by zero at index " + std::to_string(j));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i], v = z[i % nb];
    switch (op) {
      case BinaryOp::add: y[i] = u + v; break;
      case BinaryOp::sub: y[i] = u - v; break;
      case BinaryOp::mul: y[i] = u * v; break;
      case BinaryOp::div: y[i] = u / v; break;
    }
  }
  return g.record(name(op), sa, std::move(y), {a, b},
                  [a, b, op, n, nb](Graph& g, std::span<const double> up) {
                    auto x = g.value(a);
                    auto z = g.value(b);
                    if (g.requires_grad(a)) {
                      auto da = g.grad_buffer(a);
                      for (std::size_t i = 0; i < n; ++i) {
                        switch (op) {
                          case BinaryOp::add:
                          case BinaryOp::sub: da[i] += up[i]; break;
                          case BinaryOp::mul: da[i] += up[i] * z[i % nb]; break;
                          case BinaryOp::div: da[i] += up[i] / z[i % nb]; break;
                        }
                      }
                    }
                    if (g.requires_grad(b)) {
                      auto db = g.grad_buffer(b);
                      for (std::size_t i = 0; i < n; ++i) {
                        const std::size_t j = i % nb;
                        switch (op) {
                          case BinaryOp::add: db[j] += up[i]; break;
                          case BinaryOp::sub: db[j] -= up[i]; break;
                          case BinaryOp::mul: db[j] += up[i] * x[i]; break;
                          case BinaryOp::div: db[j] -= up[i] * x[i] / (z[j] * z[j]); break;
                        }
                      }
                    }
                  });
}

Var reduce(ReduceOp op, Var a, std::optional<std::size_t> axis) {
  Graph& g = a.graph();
  const Shape sa = a.shape();
  auto x = a.values();
  const std::string_view tag = op == ReduceOp::sum ? "sum" : "mean";
  if (!axis) {
    double acc = 0.0;
    for (double v : x) acc += v;
    const double factor = op == ReduceOp::mean ? 1.0 / static_cast<double>(x.size()) : 1.0;
    return g.record(tag, {1}, {acc * factor}, {a},
                    [a, factor](Graph& g, std::span<const double> up) {
                      if (!g.requires_grad(a)) return;
                      for (double& d : g.grad_buffer(a)) d += up[0] * factor;
                    });
  }
  if (*axis >= sa.size())
    throw ShapeError(std::string(tag) + ": axis " + std::to_string(*axis) + " out of range for " +
                     to_string(sa));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < *axis; ++i) outer *= sa[i];
  for (std::size_t i = *axis + 1; i < sa.size(); ++i) inner *= sa[i];
  const std::size_t len = sa[*axis];
  Shape so;
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (i != *axis) so.push_back(sa[i]);
  if (so.empty()) so.push_back(1);
  const double factor = op == ReduceOp::mean ? 1.0 / static_cast<double>(len) : 1.0;
  std::vector<double> y(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] += x[(o * len + l) * inner + i];
  for (double& v : y) v *= factor;
  return g.record(tag, so, std::move(y), {a},
                  [a, outer, inner, len, factor](Graph& g, std::span<const double> up) {
                    if (!g.requires_grad(a)) return;
                    auto dx = g.grad_buffer(a);
                    for (std::size_t o = 0; o < outer; ++o)
                      for (std::size_t l = 0; l < len; ++l)
                        for (std::size_t i = 0; i < inner; ++i)
                          dx[(o * len + l) * inner + i] += up[o * inner + i] * factor;
                  });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  auto x = a.values();
  return a.graph().record("reshape", std::move(shape), std::vector<double>(x.begin(), x.end()),
                          {a}, [a](Graph& g, std::span<const double> up) {
                            if (!g.requires_grad(a)) return;
                            auto dx = g.grad_buffer(a);
                            for (std::size_t i = 0; i < up.size(); ++i) dx[i] += up[i];
                          });
}

Var slice(Var a, std::size_t offset, Shape shape) {
  const std::size_t n = numel(shape);
  if (offset + n > a.size())
    throw ShapeError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + n) +
                     ") exceeds " + std::to_string(a.size()) + " values");
  auto x = a.values().subspan(offset, n);
  return a.graph().record("slice", std::move(shape), std::vector<double>(x.begin(), x.end()), {a},
                          [a, offset](Graph& g, std::span<const double> up) {
                            if (!g.requires_grad(a)) return;
                            auto dx = g.grad_buffer(a).subspan(offset, up.size());
                            for (std::size_t i = 0; i < up.size(); ++i) dx[i] += up[i];
                          });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Graph& g = parts.front().graph();
  std::vector<double> y;
  for (const Var& p : parts) {
    common_graph(parts.front(), p);
    auto v = p.values();
    y.insert(y.end(), v.begin(), v.end());
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  const std::size_t total = y.size();
  return g.record("concat", {total}, std::move(y), ps, [ps](Graph& g, std::span<const double> up) {
    std::size_t off = 0;
    for (const Var& p : ps) {
      const std::size_t n = g.value(p).size();
      if (g.requires_grad(p)) {
        auto dp = g.grad_buffer(p);
        for (std::size_t i = 0; i < n; ++i) dp[i] += up[off + i];
      }
      off += n;
    }
  });
}

Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding) {
  Graph& g = common_graph(x, weight);
  common_graph(x, bias);
  const auto& sx = x.shape();
  const auto& sw = weight.shape();
  if (sx.size() != 2 || sw.size() != 3 || sw[1] != sx[0] || bias.shape() != Shape{sw[0]})
    throw ShapeError("conv1d: input " + to_string(sx) + ", weight " + to_string(sw) + ", bias " +
                     to_string(bias.shape()));
  if (stride == 0) throw ShapeError("conv1d: stride must be positive");
  const std::size_t cin = sx[0], len = sx[1], cout = sw[0], k = sw[2];
  if (len + 2 * padding < k) throw ShapeError("conv1d: input shorter than kernel");
  const std::size_t tout = (len + 2 * padding - k) / stride + 1;
  auto xv = x.values();
  auto wv = weight.values();
  auto bv = bias.values();
  std::vector<double> y(cout * tout);
  for (std::size_t o = 0; o < cout; ++o) {
    double* row = y.data() + o * tout;
    std::fill(row, row + tout, bv[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xr = xv.data() + c * len;
      for (std::size_t j = 0; j < k; ++j) {
        const double w = wv[(o * cin + c) * k + j];
        for (std::size_t t = 0; t < tout; ++t) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + j) -
                                     static_cast<std::ptrdiff_t>(padding);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) row[t] += w * xr[src];
        }
      }
    }
  }
  return g.record(
      "conv1d", {cout, tout}, std::move(y), {x, weight, bias},
      [x, weight, bias, cin, len, cout, k, tout, stride, padding](Graph& g,
                                                                   std::span<const double> up) {
        auto xv = g.value(x);
        auto wv = g.value(weight);
        const bool gx = g.requires_grad(x), gw = g.requires_grad(weight);
        std::span<double> dx, dw;
        if (gx) dx = g.grad_buffer(x);
        if (gw) dw = g.grad_buffer(weight);
        if (g.requires_grad(bias)) {
          auto db = g.grad_buffer(bias);
          for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t t = 0; t < tout; ++t) db[o] += up[o * tout + t];
        }
        for (std::size_t o = 0; o < cout; ++o) {
          const double* gr = up.data() + o * tout;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t j = 0; j < k; ++j) {
              const std::size_t widx = (o * cin + c) * k + j;
              const double w = wv[widx];
              double acc = 0.0;
              for (std::size_t t = 0; t < tout; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + j) -
                                           static_cast<std::ptrdiff_t>(padding);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                acc += gr[t] * xv[c * len + src];
                if (gx) dx[c * len + src] += gr[t] * w;
              }
              if (gw) dw[widx] += acc;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.parameter(t));
    Var y = f(g, vars);
    g.backward(y);
    for (const Var& v : vars) analytic.push_back(g.grad(v));
  }
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : xs) vars.push_back(g.constant(t));
    return f(g, vars).item();
  };

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    std::vector<std::size_t> coords(inputs[t].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.coords_per_input && options.coords_per_input < coords.size()) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.coords_per_input);
    }
    for (std::size_t c : coords) {
      const double orig = inputs[t].values[c];
      probe[t].values[c] = orig + options.step;
      const double fp = evaluate(probe);
      probe[t].values[c] = orig - options.step;
      const double fm = evaluate(probe);
      probe[t].values[c] = orig;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double a = analytic[t].values[c];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.coords_checked;
    }
  }
  return result;
}

}  // namespace ainr
