#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ainr/error.hpp"
#include "ainr/metrics.hpp"
#include "oracles.hpp"

using namespace ainr;

TEST_CASE("mse and psnr") {
  auto r = mse_psnr(std::vector<double>{1, 0, 1, 0}, std::vector<double>{0, 0, 0, 0});
  CHECK(r.mse == 0.5);
  CHECK(r.psnr == doctest::Approx(3.0103).epsilon(1e-5));
  CHECK(r.psnr == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-15));

  const auto x = oracle::random_vector(300, 1, 0.3);
  CHECK(mse_psnr(x, x).mse == 0.0);
  CHECK(mse_psnr(x, x).psnr == kPsnrExact);

  const auto e = oracle::random_vector(300, 2, 0.01);
  std::vector<double> a(x.size()), b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    a[i] = x[i] + e[i];
    b[i] = x[i] + 0.5 * e[i];
  }
  CHECK(mse_psnr(x, b).psnr - mse_psnr(x, a).psnr == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-10));
  CHECK_THROWS_AS(mse_psnr(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("si-snr") {
  const auto x = oracle::random_vector(1000, 3);
  CHECK(si_snr(x, x) == kSiSnrCap);
  std::vector<double> x3(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x3[i] = 3.0 * x[i];
  CHECK(si_snr(x, x3) == kSiSnrCap);

  // Zero-mean both; alpha = 2/4, target energy 1, noise energy 1 -> 0 dB.
  CHECK(si_snr(std::vector<double>{1, -1, 1, -1}, std::vector<double>{1, -1, 0, 0}) == 0.0);

  const auto y = oracle::random_vector(1000, 4);
  std::vector<double> y7(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y7[i] = 0.7 * y[i];
  CHECK(si_snr(x, y7) == doctest::Approx(si_snr(x, y)).epsilon(1e-12));
  CHECK(si_snr(x, y) >= -kSiSnrCap);
  CHECK(si_snr(x, y) <= kSiSnrCap);
  CHECK_THROWS_AS(si_snr(std::vector<double>(8, 1.0), y7), Error);
}

TEST_CASE("log-spectral distance") {
  const auto x = oracle::random_vector(8192, 5);
  CHECK(lsd(x, x) == 0.0);
  std::vector<double> x10(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x10[i] = 10.0 * x[i];
  CHECK(std::abs(lsd(x, x10) - 2.0) <= 1e-4);
  const auto y = oracle::random_vector(8192, 6);
  CHECK(lsd(x, y) == doctest::Approx(lsd(y, x)).epsilon(1e-14));
  CHECK(lsd(x, y) > 0.0);
  CHECK_THROWS_AS(lsd(std::vector<double>(100, 0.0), std::vector<double>(100, 0.0)), ContractError);
}

TEST_CASE("squared-support Wasserstein") {
  std::vector<double> p{1, 0, 0, 0}, q{0, 1, 0, 0};
  CHECK(squared_support_wasserstein(p, q) == 1.0);
  CHECK(squared_support_wasserstein(p, std::vector<double>{0, 0, 0, 5}) == 9.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(32), b(32);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    worst = std::max(worst, std::abs(squared_support_wasserstein(a, b) - oracle::wasserstein_quantile(a, b)));
    CHECK(squared_support_wasserstein(a, b) == doctest::Approx(squared_support_wasserstein(b, a)).epsilon(1e-12));
    CHECK(squared_support_wasserstein(a, b) >= 0.0);
    CHECK(squared_support_wasserstein(a, a) == 0.0);
  }
  CHECK(worst <= 1e-9);

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(16), b(16), c(16);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    for (auto& v : c) v = u(rng);
    CHECK(squared_support_wasserstein(a, c) <=
          squared_support_wasserstein(a, b) + squared_support_wasserstein(b, c) + 1e-12);
  }
  CHECK_THROWS_AS(squared_support_wasserstein(std::vector<double>(3, 1.0), std::vector<double>(4, 1.0)), ShapeError);
}

TEST_CASE("spectral Wasserstein of signals") {
  // Unit impulse and a constant: flat spectrum vs all mass on bin 0.
  std::vector<double> imp{1, 0, 0, 0}, dc{1, 1, 1, 1};
  CHECK(spectral_wasserstein(imp, imp) == 0.0);
  // |FFT(imp)| = [1,1,1,1], |FFT(dc)| = [4,0,0,0]; CDF gaps 3/4,1/2,1/4 on
  // widths 1,3,5 give 3/4+3/2+5/4 = 3.5, divided by N = 4.
  CHECK(spectral_wasserstein(imp, dc) == doctest::Approx(3.5 / 4.0).epsilon(1e-14));
  const auto x = oracle::random_vector(256, 12);
  const auto y = oracle::random_vector(256, 13);
  CHECK(spectral_wasserstein(x, y) == doctest::Approx(spectral_wasserstein(y, x)).epsilon(1e-12));
  CHECK_THROWS_AS(spectral_wasserstein(std::vector<double>(4, 0.0), dc), DomainError);
}

TEST_CASE("spectrogram export") {
  const auto dir = oracle::temp_dir("spectrogram");
  const StftResolution res{256, 64, 256, WindowKind::hann};
  const std::size_t k = 21;
  const auto x = oracle::sine_mixture(2048, 22050.0, {k * 22050.0 / 256.0}, {0.7}, {0.1});
  spectrogram_export(x, dir / "tone", res);

  const Tensor db = spectrogram_db(x, res);
  std::ifstream csv(dir / "tone.csv");
  REQUIRE(csv);
  std::string line;
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      CHECK(std::abs(std::stod(cell) - db.values[row * db.shape[1] + col]) <= 1e-6);
      ++col;
    }
    CHECK(col == db.shape[1]);
    ++row;
  }
  CHECK(row == db.shape[0]);

  std::ifstream pgm(dir / "tone.pgm", std::ios::binary);
  REQUIRE(pgm);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  pgm >> magic >> w >> h >> maxv;
  pgm.get();
  CHECK(magic == "P5");
  CHECK(w == db.shape[0]);
  CHECK(h == db.shape[1]);
  CHECK(maxv == 255);
  std::vector<unsigned char> px(w * h);
  pgm.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  REQUIRE(pgm.gcount() == static_cast<std::streamsize>(px.size()));
  std::size_t bright = 0;
  std::size_t best = 0;
  for (std::size_t r = 0; r < h; ++r) {
    std::size_t s = 0;
    for (std::size_t c = 0; c < w; ++c) s += px[r * w + c];
    if (s > best) {
      best = s;
      bright = r;
    }
  }
  CHECK(bright == k);

  spectrogram_export(std::vector<double>(1024, 0.0), dir / "silence", res);
  std::ifstream z(dir / "silence.pgm", std::ios::binary);
  z >> magic >> w >> h >> maxv;
  z.get();
  std::vector<unsigned char> zp(w * h);
  z.read(reinterpret_cast<char*>(zp.data()), static_cast<std::streamsize>(zp.size()));
  for (auto v : zp) CHECK(v == zp[0]);
}

TEST_CASE("report aggregates and csv") {
  MetricsReport report;
  std::vector<double> psnrs{10.0, 12.5, 20.25};
  for (std::size_t i = 0; i < 3; ++i) {
    MetricValues v{0.1 * static_cast<double>(i + 1), psnrs[i], 1.0, 5.0 + static_cast<double>(i), 0.5};
    report.add({"clip" + std::to_string(i), "kan", 31080, v});
    report.add({"clip" + std::to_string(i), "siren", 33409, v});
  }
  report.skip("broken.wav", "unreadable");
  const auto agg = report.aggregates();
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].arch == "kan");
  CHECK(agg[1].arch == "siren");
  CHECK(agg[0].count == 3);
  const double mean = (10.0 + 12.5 + 20.25) / 3.0;
  double var = 0.0;
  for (double p : psnrs) var += (p - mean) * (p - mean);
  CHECK(std::abs(agg[0].mean.psnr - mean) <= 1e-12);
  CHECK(std::abs(agg[0].stddev.psnr - std::sqrt(var / 3.0)) <= 1e-12);
  CHECK(std::abs(agg[0].mean.mse - 0.2) <= 1e-12);
  CHECK(agg[0].stddev.lsd == 0.0);

  const auto csv = report.to_csv();
  CHECK(csv.rfind("clip_id,arch,params,mse,psnr,lsd,sisnr,wd\n", 0) == 0);
  CHECK(csv.find("clip1,siren,33409,") != std::string::npos);
  CHECK(csv.find("mean,kan,31080,") != std::string::npos);
  CHECK(csv.find("std,siren,33409,") != std::string::npos);
  const auto table = report.to_table_csv();
  CHECK(table.rfind("arch,params,reference_params,clips,mse_mean,mse_std", 0) == 0);
  CHECK(table.find("kan,31080,33768,3,") != std::string::npos);
  CHECK(report.skipped().size() == 1);
}

TEST_CASE("compute_metrics bundles the individual metrics") {
  const auto x = oracle::random_vector(4096, 20, 0.2);
  const auto y = oracle::random_vector(4096, 21, 0.2);
  const auto m = compute_metrics(x, y);
  CHECK(m.mse == mse_psnr(x, y).mse);
  CHECK(m.psnr == mse_psnr(x, y).psnr);
  CHECK(m.lsd == lsd(x, y));
  CHECK(m.sisnr == si_snr(x, y));
  CHECK(m.wd == spectral_wasserstein(x, y));

  const std::vector<double> silent(4096, 0.0);
  const auto s = compute_metrics(silent, silent);
  CHECK(s.mse == 0.0);
  CHECK(s.lsd == 0.0);
  CHECK(std::isnan(s.sisnr));
  CHECK(std::isnan(s.wd));
}
