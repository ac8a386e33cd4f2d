#include <doctest.h>

#include <cmath>

#include "ainr/error.hpp"
#include "ainr/loss.hpp"
#include "oracles.hpp"

using namespace ainr;

namespace {

LossConfig small_config() {
  LossConfig c;
  c.resolutions = {StftResolution{64, 16, 64, WindowKind::hann}, StftResolution{128, 32, 128, WindowKind::hann}};
  c.n_mels = 16;
  return c;
}

double loss_value(const std::vector<double>& x, const std::vector<double>& xhat, const LossConfig& c) {
  Graph g;
  return combined_loss(g.constant(Tensor::vector(x)), g.constant(Tensor::vector(xhat)), c).item();
}

}  // namespace

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (double hz : {10.0, 440.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
}

TEST_CASE("mel filterbank rows are non-negative and cover the interior bins") {
  for (std::size_t fft : {512, 1024, 2048}) {
    auto fb = MelFilterbank::make(80, 22050.0, fft);
    const std::size_t bins = fft / 2 + 1;
    REQUIRE(fb.matrix.shape == Shape{80, bins});
    for (double w : fb.matrix.values) CHECK(w >= 0.0);
    for (std::size_t k = 1; k + 1 < bins; ++k) {
      double col = 0.0;
      for (std::size_t m = 0; m < 80; ++m) col += fb.matrix.values[m * bins + k];
      CAPTURE(k);
      CHECK(col > 0.0);
    }
  }
  CHECK_THROWS_AS(MelFilterbank::make(0, 22050.0, 512), ConfigError);
  CHECK_THROWS_AS(MelFilterbank::make(10, 22050.0, 512, 5000.0, 100.0), ConfigError);
}

TEST_CASE("mel_project examples") {
  auto fb = MelFilterbank::make(8, 16000.0, 64);
  const std::size_t bins = 33;
  {
    Graph g;
    auto y = mel_project(g.constant(Tensor::filled({1, bins}, 1.0)), fb);
    for (std::size_t m = 0; m < 8; ++m) {
      double row = 0.0;
      for (std::size_t k = 0; k < bins; ++k) row += fb.matrix.values[m * bins + k];
      CHECK(y.values()[m] == doctest::Approx(row).epsilon(1e-14));
    }
  }
  {
    Graph g;
    for (double v : mel_project(g.constant(Tensor::zeros({3, bins})), fb).values()) CHECK(v == 0.0);
  }
  {
    Graph g;
    auto e = Tensor::zeros({1, bins});
    e.values[7] = 1.0;
    auto y = mel_project(g.constant(e), fb);
    for (std::size_t m = 0; m < 8; ++m) CHECK(y.values()[m] == fb.matrix.values[m * bins + 7]);
  }
  {
    Graph g;
    CHECK_THROWS_AS(mel_project(g.constant(Tensor::zeros({1, bins + 1})), fb), ShapeError);
  }
}

TEST_CASE("stft_mag matches the naive DFT and its gradient") {
  const StftResolution r{32, 8, 24, WindowKind::hann};
  const auto x = oracle::random_vector(80, 1);
  Graph g;
  auto mag = stft_mag(g.constant(Tensor::vector(x)), r);
  const auto w = dsp::analysis_window(r);
  const std::size_t frames = r.frames(x.size());
  REQUIRE(mag.shape() == Shape{frames, r.bins()});
  const std::size_t off = (r.fft_size - r.window_size) / 2;
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<double> frame(r.fft_size, 0.0);
    for (std::size_t i = 0; i < r.fft_size; ++i) {
      const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(f * r.hop_size + i) - static_cast<std::ptrdiff_t>(off);
      if (s >= 0 && s < static_cast<std::ptrdiff_t>(x.size())) frame[i] = x[static_cast<std::size_t>(s)] * w[i];
    }
    const auto ref = oracle::naive_dft(frame);
    for (std::size_t k = 0; k < r.bins(); ++k) CHECK(std::abs(mag.values()[f * r.bins() + k] - std::abs(ref[k])) < 1e-10);
  }

  auto f = [&](Graph&, std::span<const Var> in) { return sum(square(stft_mag(in[0], r))); };
  CHECK(grad_check(f, {Tensor::vector(x)}).max_rel_error <= 1e-5);
  Graph g2;
  CHECK_THROWS_AS(stft_mag(g2.constant(Tensor::vector(std::vector<double>(20, 0.0))), r), ContractError);
}

TEST_CASE("identical signals give zero loss") {
  const auto x = oracle::random_vector(512, 2, 0.3);
  CHECK(loss_value(x, x, small_config()) == 0.0);
  LossConfig def;
  const auto y = oracle::random_vector(4096, 3, 0.3);
  CHECK(loss_value(y, y, def) == 0.0);
}

TEST_CASE("loss is non-negative and positive for distinct signals") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto x = oracle::random_vector(512, 10 + s, 0.3);
    const auto y = oracle::random_vector(512, 30 + s, 0.3);
    Graph g;
    const double v = mr_mel_stft_loss(g.constant(Tensor::vector(x)), g.constant(Tensor::vector(y)), small_config()).item();
    CHECK(v > 0.0);
    CHECK(loss_value(x, y, small_config()) > 0.0);
  }
}

TEST_CASE("lambda_freq = 0 reduces to mean absolute error") {
  auto c = small_config();
  c.lambda_freq = 0.0;
  const auto x = oracle::random_vector(512, 4);
  const auto y = oracle::random_vector(512, 5);
  double mae = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mae += std::abs(x[i] - y[i]);
  mae /= static_cast<double>(x.size());
  CHECK(loss_value(x, y, c) == doctest::Approx(mae).epsilon(1e-14));
}

TEST_CASE("constant offset of 0.1") {
  const auto x = oracle::random_vector(2048, 6, 0.2);
  auto y = x;
  for (auto& v : y) v += 0.1;
  Graph g;
  const double l1 = l1_loss(g.constant(Tensor::vector(x)), g.constant(Tensor::vector(y))).item();
  CHECK(std::abs(l1 - 0.1) <= 1e-12);
  CHECK(loss_value(x, y, LossConfig{}) >= 0.1);
}

TEST_CASE("length mismatch and invalid weights") {
  Graph g;
  auto a = g.constant(Tensor::vector(std::vector<double>(512, 0.0)));
  auto b = g.constant(Tensor::vector(std::vector<double>(511, 0.0)));
  CHECK_THROWS_AS(combined_loss(a, b, small_config()), ShapeError);
  auto c = small_config();
  c.lambda_time = -1.0;
  CHECK_THROWS_AS(CombinedLoss{c}, ConfigError);
}

TEST_CASE("mel-STFT loss gradient on 512 samples") {
  const auto x = oracle::random_vector(512, 7, 0.4);
  const auto y = oracle::random_vector(512, 8, 0.4);
  auto f = [&](Graph& g, std::span<const Var> in) {
    return mr_mel_stft_loss(g.constant(Tensor::vector(x)), in[0], small_config());
  };
  GradCheckOptions opt;
  opt.coords_per_input = 64;
  CHECK(grad_check(f, {Tensor::vector(y)}, opt).max_rel_error < 1e-3);
}

TEST_CASE("prepared targets match the direct evaluation") {
  const auto x = oracle::random_vector(512, 9, 0.4);
  const auto y = oracle::random_vector(512, 10, 0.4);
  const CombinedLoss loss(small_config());
  const auto target = loss.prepare(x);
  Graph g1, g2;
  const double direct = loss(g1.constant(Tensor::vector(x)), g1.constant(Tensor::vector(y))).item();
  const double cached = loss(target, g2.constant(Tensor::vector(y))).item();
  CHECK(direct == cached);
}

TEST_CASE("scaling lambda_time scales the L1 gradient exactly") {
  const auto x = oracle::random_vector(256, 11);
  const auto y = oracle::random_vector(256, 12);
  auto grad_for = [&](double lt) {
    LossConfig c = small_config();
    c.lambda_time = lt;
    c.lambda_freq = 0.0;
    Graph g;
    auto p = g.parameter(Tensor::vector(y));
    g.backward(combined_loss(g.constant(Tensor::vector(x)), p, c));
    return g.grad(p).values;
  };
  const auto g1 = grad_for(1.0);
  const auto g3 = grad_for(4.0);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == 4.0 * g1[i]);
}
