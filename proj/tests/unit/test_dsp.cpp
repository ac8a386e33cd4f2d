#include <doctest.h>

#include <cmath>

#include "ainr/dsp.hpp"
#include "ainr/error.hpp"
#include "oracles.hpp"

using namespace ainr;

TEST_CASE("rfft and fft_full agree with a naive DFT") {
  for (std::size_t n : {1, 2, 7, 16, 33, 64}) {
    const auto x = oracle::random_vector(n, n);
    const auto ref = oracle::naive_dft(x);
    const auto full = dsp::fft_full(x);
    const auto half = dsp::rfft(x);
    REQUIRE(full.size() == n);
    REQUIRE(half.size() == n / 2 + 1);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(full[k] - ref[k]) < 1e-10);
    for (std::size_t k = 0; k < half.size(); ++k) CHECK(std::abs(half[k] - ref[k]) < 1e-10);
  }
}

TEST_CASE("unnormalised inverse") {
  const std::size_t n = 32;
  const auto x = oracle::random_vector(n, 3);
  auto y = dsp::irfft_unnormalized(dsp::rfft(x), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(x[i] * n).epsilon(1e-12));
}

TEST_CASE("periodic Hann window") {
  auto w = dsp::hann_window(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  StftResolution r{16, 4, 8, WindowKind::hann};
  auto a = dsp::analysis_window(r);
  CHECK(a.size() == 16);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == 0.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(a[4 + i] == w[i]);
}

TEST_CASE("stft framing and validation") {
  StftResolution r{64, 16, 64, WindowKind::hann};
  CHECK(r.frames(64) == 1);
  CHECK(r.frames(127) == 4);
  CHECK(r.frames(10) == 0);
  CHECK(dsp::stft(std::vector<double>(200, 0.0), r).size() == r.frames(200) * r.bins());
  CHECK_THROWS_AS(dsp::stft(std::vector<double>(63, 0.0), r), ContractError);
  CHECK_THROWS_AS((StftResolution{64, 0, 64, WindowKind::hann}.validate()), ConfigError);
  CHECK_THROWS_AS((StftResolution{64, 80, 64, WindowKind::hann}.validate()), ConfigError);
  CHECK_THROWS_AS((StftResolution{64, 16, 65, WindowKind::hann}.validate()), ConfigError);
}

TEST_CASE("bin-exact sine peaks at its bin in every frame") {
  const std::size_t fft = 256, k = 19;
  const double sr = 22050.0;
  const auto x = oracle::sine_mixture(2048, sr, {k * sr / fft}, {0.8}, {0.3});
  StftResolution r{fft, 64, fft, WindowKind::hann};
  const auto mag = dsp::stft_magnitude(x, r);
  const std::size_t bins = r.bins();
  for (std::size_t f = 0; f < r.frames(x.size()); ++f) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < bins; ++b)
      if (mag[f * bins + b] > mag[f * bins + best]) best = b;
    CHECK(best == k);
  }
}

TEST_CASE("Parseval on a rectangular single frame") {
  const std::size_t n = 128;
  const auto x = oracle::random_vector(n, 17);
  StftResolution r{n, n, n, WindowKind::rectangular};
  const auto full = dsp::fft_full(x);
  double spec = 0.0, energy = 0.0;
  for (auto z : full) spec += std::norm(z);
  for (double v : x) energy += v * v;
  CHECK(std::abs(spec - n * energy) <= 1e-9 * spec);

  // The half spectrum from stft accounts for the mirrored bins once.
  const auto frame = dsp::stft(x, r);
  double half = std::norm(frame[0]) + std::norm(frame[n / 2]);
  for (std::size_t b = 1; b < n / 2; ++b) half += 2.0 * std::norm(frame[b]);
  CHECK(std::abs(half - n * energy) <= 1e-9 * half);
}

TEST_CASE("zero signal has zero magnitudes") {
  StftResolution r{128, 32, 128, WindowKind::hann};
  for (double m : dsp::stft_magnitude(std::vector<double>(512, 0.0), r)) CHECK(m == 0.0);
}
