#include <doctest.h>

#include <cmath>

#include "ainr/error.hpp"
#include "ainr/tensor.hpp"
#include "oracles.hpp"

using namespace ainr;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor::matrix(r, c, std::move(v));
}

}  // namespace

TEST_CASE("tensor factories keep numel and values in step") {
  auto t = Tensor::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(numel({2, 3, 4}) == 24);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
}

TEST_CASE("matmul") {
  Graph g;
  Var a = g.constant(mat(2, 2, {1, 2, 3, 4}));
  Var b = g.constant(mat(2, 1, {1, 1}));
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.values()[0] == 3.0);
  CHECK(c.values()[1] == 7.0);

  auto r = oracle::random_vector(9, 1);
  Var m = g.constant(mat(3, 3, r));
  Var id = g.constant(mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  auto p = matmul(m, id).values();
  for (std::size_t i = 0; i < 9; ++i) CHECK(p[i] == r[i]);

  CHECK_THROWS_AS(matmul(a, g.constant(mat(3, 1, {1, 2, 3}))), ShapeError);
}

TEST_CASE("matmul gradient equals broadcast column sums of B") {
  const auto av = oracle::random_vector(6, 2);
  const auto bv = oracle::random_vector(12, 3);
  Graph g;
  Var a = g.parameter(mat(2, 3, av));
  Var b = g.constant(mat(3, 4, bv));
  g.backward(sum(matmul(a, b)));
  const auto ga = g.grad(a);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < 4; ++j) row_sum += bv[k * 4 + j];
      CHECK(ga.values[i * 3 + k] == doctest::Approx(row_sum).epsilon(1e-14));
    }

  // Same check against central differences, independent of the engine.
  auto f = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 3; ++k) s += x[i * 3 + k] * bv[k * 4 + j];
    return s;
  };
  for (std::size_t i = 0; i < 6; ++i) {
    const double fd = oracle::central_difference(f, av, i);
    CHECK(std::abs(fd - ga.values[i]) / std::max(std::abs(fd), 1e-12) < 1e-6);
  }
}

TEST_CASE("unary values") {
  Graph g;
  Var x = g.constant(Tensor::vector({0.0, 1.0}));
  auto s = silu(x).values();
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  Var t = g.constant(Tensor::vector({0.0, std::numbers::pi / 2, std::numbers::pi}));
  auto v = sin(t).values();
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 1.0);
  CHECK(std::abs(v[2]) < 1e-15);
  CHECK_THROWS_AS(log(g.constant(Tensor::vector({1.0, 0.0}))), DomainError);
  CHECK_THROWS_AS(log(g.constant(Tensor::vector({-1.0}))), DomainError);
}

TEST_CASE("abs and sqrt subgradients at zero are zero") {
  Graph g;
  Var x = g.parameter(Tensor::vector({0.0, 2.0, -3.0}));
  g.backward(sum(abs(x)));
  auto d = g.grad(x).values;
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == -1.0);
}

TEST_CASE("binary ops and trailing-axis broadcast") {
  Graph g;
  Var a = g.constant(Tensor::vector({1, 2}));
  Var b = g.constant(Tensor::vector({3, 4}));
  auto s = add(a, b).values();
  CHECK(s[0] == 4.0);
  CHECK(s[1] == 6.0);
  for (double v : sub(a, a).values()) CHECK(v == 0.0);

  Var m = g.constant(mat(2, 2, {1, 2, 3, 4}));
  auto bc = add(m, b).values();
  CHECK(bc[0] == 4.0);
  CHECK(bc[3] == 8.0);
  CHECK_THROWS_AS(add(m, g.constant(Tensor::vector({1, 2, 3}))), ShapeError);
  CHECK_THROWS_AS(div(a, g.constant(Tensor::vector({1, 0}))), DomainError);

  Graph h;
  Var x = h.parameter(Tensor::scalar(2.0));
  Var y = h.constant(Tensor::scalar(3.0));
  h.backward(mul(x, y));
  CHECK(h.grad(x).values[0] == 3.0);
}

TEST_CASE("reductions") {
  Graph g;
  Var x = g.parameter(Tensor::vector({1, 2, 3, 4}));
  CHECK(sum(g.constant(Tensor::vector({1, 2, 3}))).item() == 6.0);
  CHECK(mean(g.constant(Tensor::filled({5}, 2.5))).item() == 2.5);
  g.backward(mean(x));
  for (double d : g.grad(x).values) CHECK(d == 0.25);

  Graph h;
  Var m = h.constant(mat(2, 3, {1, 2, 3, 4, 5, 6}));
  auto rows = sum(m, 1).values();
  CHECK(rows[0] == 6.0);
  CHECK(rows[1] == 15.0);
  auto cols = mean(m, 0).values();
  CHECK(cols[2] == 4.5);
  CHECK_THROWS_AS(sum(m, 2), ShapeError);
}

TEST_CASE("backward basics") {
  {
    Graph g;
    Var x = g.parameter(Tensor::scalar(3.0));
    g.backward(square(x));
    CHECK(g.grad(x).values[0] == 6.0);
  }
  {
    Graph g;
    Var x = g.parameter(Tensor::scalar(0.0));
    g.backward(mul(sin(x), x));
    CHECK(g.grad(x).values[0] == 0.0);
  }
  {
    Graph g;  // diamond: both uses accumulate
    Var x = g.parameter(Tensor::scalar(1.5));
    g.backward(add(x, x));
    CHECK(g.grad(x).values[0] == 2.0);
  }
  {
    Graph g;
    Var x = g.parameter(Tensor::vector({1, 2}));
    Var unused = g.parameter(Tensor::vector({5, 6, 7}));
    CHECK_THROWS_AS(g.backward(square(x)), ContractError);  // non-scalar
    g.backward(sum(x));
    CHECK(g.grad(unused).values == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(g.backward(sum(x)), ContractError);  // second sweep
  }
}

TEST_CASE("every op tag passes a finite-difference check") {
  const auto base = oracle::random_vector(12, 11);
  std::vector<double> positive(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) positive[i] = 0.5 + std::abs(base[i]);
  std::vector<double> nonzero(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) nonzero[i] = base[i] + (base[i] >= 0 ? 0.3 : -0.3);

  struct Case {
    const char* name;
    ScalarFn f;
    std::vector<double> input;
  };
  const auto w = oracle::random_vector(12, 12);
  auto weighted = [w](Graph& g, Var y) { return sum(mul(y, g.constant(Tensor(y.shape(), w)))); };
  std::vector<Case> cases;
  for (auto op : {UnaryOp::sin, UnaryOp::cos, UnaryOp::exp, UnaryOp::square, UnaryOp::silu,
                  UnaryOp::negate})
    cases.push_back({"unary", [=](Graph& g, std::span<const Var> in) { return weighted(g, unary(op, in[0], 0.0)); }, base});
  cases.push_back({"scale", [=](Graph& g, std::span<const Var> in) { return weighted(g, scale(in[0], -1.7)); }, base});
  cases.push_back({"shift", [=](Graph& g, std::span<const Var> in) { return weighted(g, shift(in[0], 0.4)); }, base});
  cases.push_back({"log", [=](Graph& g, std::span<const Var> in) { return weighted(g, log(in[0])); }, positive});
  cases.push_back({"sqrt", [=](Graph& g, std::span<const Var> in) { return weighted(g, sqrt(in[0])); }, positive});
  cases.push_back({"abs", [=](Graph& g, std::span<const Var> in) { return weighted(g, abs(in[0])); }, nonzero});
  cases.push_back({"relu", [=](Graph& g, std::span<const Var> in) { return weighted(g, relu(in[0])); }, nonzero});
  // Distinct from the input so x/b + b/x keeps a non-vanishing derivative.
  std::vector<double> other(positive.size());
  for (std::size_t i = 0; i < other.size(); ++i) other[i] = 0.2 + 1.7 * positive[i];
  for (auto op : {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div})
    cases.push_back({"binary", [=](Graph& g, std::span<const Var> in) {
                       Var b = g.constant(Tensor::vector(other));
                       return weighted(g, add(binary(op, in[0], b), binary(op, b, in[0])));
                     }, positive});
  cases.push_back({"broadcast", [=](Graph& g, std::span<const Var> in) {
                     Var m = reshape(in[0], {3, 4});
                     Var row = slice(in[0], 4, {4});
                     return weighted(g, reshape(mul(m, row), {12}));
                   }, base});
  cases.push_back({"reduce-axis", [=](Graph& g, std::span<const Var> in) {
                     Var m = reshape(in[0], {3, 4});
                     return add(sum(square(mean(m, 0))), sum(square(sum(m, 1))));
                   }, base});
  cases.push_back({"concat-slice", [=](Graph& g, std::span<const Var> in) {
                     const Var parts[] = {slice(in[0], 2, {3}), in[0]};
                     return weighted(g, slice(concat(parts), 0, {12}));
                   }, base});
  cases.push_back({"linear", [=](Graph& g, std::span<const Var> in) {
                     Var x = reshape(slice(in[0], 0, {6}), {2, 3});
                     Var wt = reshape(slice(in[0], 3, {6}), {2, 3});
                     Var b = slice(in[0], 9, {2});
                     return sum(square(linear(x, wt, b)));
                   }, base});

  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    CAPTURE(cases[i].name);
    const auto r = grad_check(cases[i].f, {Tensor::vector(cases[i].input)});
    CHECK(r.coords_checked == 12);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("conv1d matches a direct loop and its gradients") {
  const auto x = oracle::random_vector(2 * 9, 21);
  const auto w = oracle::random_vector(3 * 2 * 3, 22);
  const auto b = oracle::random_vector(3, 23);
  Graph g;
  Var y = conv1d(g.constant(Tensor({2, 9}, x)), g.constant(Tensor({3, 2, 3}, w)),
                 g.constant(Tensor::vector(b)), 2, 1);
  CHECK(y.shape() == Shape{3, 5});
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t t = 0; t < 5; ++t) {
      double acc = b[o];
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < 3; ++k) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t * 2 + k) - 1;
          if (s >= 0 && s < 9) acc += w[(o * 2 + c) * 3 + k] * x[c * 9 + static_cast<std::size_t>(s)];
        }
      CHECK(y.values()[o * 5 + t] == doctest::Approx(acc).epsilon(1e-14));
    }

  auto f = [](Graph& g, std::span<const Var> in) {
    Var out = conv1d(in[0], in[1], in[2], 2, 1);
    return sum(square(out));
  };
  const auto r = grad_check(f, {Tensor({2, 9}, x), Tensor({3, 2, 3}, w), Tensor::vector(b)});
  CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("grad_check reference cases") {
  auto sq = [](Graph&, std::span<const Var> in) { return sum(square(in[0])); };
  CHECK(grad_check(sq, {Tensor::vector(oracle::random_vector(20, 5))}).max_rel_error < 1e-8);
  auto constant = [](Graph& g, std::span<const Var>) { return g.constant(Tensor::scalar(4.0)); };
  const auto r = grad_check(constant, {Tensor::vector({1, 2, 3})});
  CHECK(r.max_rel_error == 0.0);
}

TEST_CASE("64-bit results are bitwise deterministic") {
  auto run = [] {
    Graph g;
    Var x = g.parameter(Tensor::vector(oracle::random_vector(50, 9)));
    Var w = g.constant(Tensor({5, 10}, oracle::random_vector(50, 10)));
    Var y = sum(silu(linear(reshape(x, {5, 10}), w)));
    g.backward(y);
    return std::make_pair(y.item(), g.grad(x).values);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("f32 mode rounds values through float") {
  Graph g(Precision::f32);
  Var x = g.constant(Tensor::vector({0.1}));
  Var y = scale(x, 3.0);
  CHECK(y.values()[0] == static_cast<double>(static_cast<float>(y.values()[0])));
}

TEST_CASE("non-finite values are rejected") {
  Graph g;
  Var x = g.constant(Tensor::vector({800.0}));
  CHECK_THROWS_AS(exp(x), DomainError);
}
