#include "ainr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ainr/error.hpp"
#include "ainr/inr.hpp"
#include "ainr/io_util.hpp"

namespace ainr {

namespace {

void require_pair(std::span<const double> x, std::span<const double> xhat, const char* what) {
  if (x.empty()) throw ContractError(std::string(what) + ": empty input");
  if (x.size() != xhat.size())
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(xhat.size()));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

MsePsnr mse_psnr(std::span<const double> x, std::span<const double> xhat) {
  require_pair(x, xhat, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    acc += d * d;
  }
  MsePsnr r;
  r.mse = acc / static_cast<double>(x.size());
  r.psnr = r.mse == 0.0 ? kPsnrExact : 10.0 * std::log10(1.0 / r.mse);
  return r;
}

StftResolution lsd_resolution() { return {2048, 512, 2048, WindowKind::hann}; }

double lsd(std::span<const double> x, std::span<const double> xhat, const StftResolution& res) {
  require_pair(x, xhat, "lsd");
  res.validate();
  if (x.size() < res.window_size)
    throw ContractError("lsd needs at least " + std::to_string(res.window_size) + " samples");
  auto a = dsp::stft(x, res);
  auto b = dsp::stft(xhat, res);
  const std::size_t bins = res.bins(), frames = a.size() / bins;
  constexpr double floor = 1e-8;
  double total = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double pa = std::norm(a[f * bins + k]);
      const double pb = std::norm(b[f * bins + k]);
      const double d = std::log10(pa + floor) - std::log10(pb + floor);
      acc += d * d;
    }
    total += std::sqrt(acc / static_cast<double>(bins));
  }
  return total / static_cast<double>(frames);
}

double si_snr(std::span<const double> x, std::span<const double> xhat) {
  require_pair(x, xhat, "si_snr");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += xhat[i];
  }
  mx /= n;
  my /= n;
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += (xhat[i] - my) * (x[i] - mx);
    ref_energy += (x[i] - mx) * (x[i] - mx);
  }
  if (ref_energy == 0.0) throw DomainError("si_snr: reference is constant after zero-meaning");
  const double alpha = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = alpha * (x[i] - mx);
    const double e = (xhat[i] - my) - s;
    target += s * s;
    noise += e * e;
  }
  if (noise == 0.0) return kSiSnrCap;
  if (target == 0.0) return -kSiSnrCap;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSnrCap, kSiSnrCap);
}

double squared_support_wasserstein(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw ShapeError("wasserstein: histograms must be non-empty and equally long");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("wasserstein: negative weight");
    sp += p[i];
    sq += q[i];
  }
  if (sp == 0.0 || sq == 0.0) throw DomainError("wasserstein: zero total mass");
  // W1 = sum_i |CDF_p(i) - CDF_q(i)| (s_{i+1} - s_i), with s_{i+1} - s_i = 2i + 1.
  double cp = 0.0, cq = 0.0, w = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cp += p[i] / sp;
    cq += q[i] / sq;
    w += std::abs(cp - cq) * static_cast<double>(2 * i + 1);
  }
  return w;
}

double spectral_wasserstein(std::span<const double> x, std::span<const double> xhat) {
  require_pair(x, xhat, "spectral_wasserstein");
  auto fx = dsp::fft_full(x);
  auto fy = dsp::fft_full(xhat);
  std::vector<double> p(fx.size()), q(fy.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::abs(fx[i]);
    q[i] = std::abs(fy[i]);
  }
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  if (sp == 0.0 || sq == 0.0) throw DomainError("spectral_wasserstein: zero-energy signal");
  return squared_support_wasserstein(p, q) / static_cast<double>(x.size());
}

Tensor spectrogram_db(std::span<const double> x, const StftResolution& res) {
  auto mag = dsp::stft_magnitude(x, res);
  for (auto& v : mag) v = 20.0 * std::log10(v + 1e-7);
  const std::size_t bins = res.bins();
  const std::size_t frames = mag.size() / bins;
  return Tensor::matrix(frames, bins, std::move(mag));
}

void spectrogram_export(std::span<const double> x, const std::filesystem::path& stem,
                        const StftResolution& res) {
  const Tensor db = spectrogram_db(x, res);
  const std::size_t frames = db.shape[0], bins = db.shape[1];

  std::ostringstream csv;
  csv.precision(17);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < bins; ++k) {
      if (k) csv << ',';
      csv << db.values[f * bins + k];
    }
    csv << '\n';
  }
  auto csv_path = stem;
  csv_path += ".csv";
  write_file_atomic(csv_path, csv.str());

  const auto [lo, hi] = std::minmax_element(db.values.begin(), db.values.end());
  const double range = *hi - *lo;
  std::string pgm = "P5\n" + std::to_string(frames) + " " + std::to_string(bins) + "\n255\n";
  const std::size_t header = pgm.size();
  pgm.resize(header + frames * bins);
  for (std::size_t k = 0; k < bins; ++k)
    for (std::size_t f = 0; f < frames; ++f) {
      const double v = range > 0.0 ? (db.values[f * bins + k] - *lo) / range : 0.0;
      pgm[header + k * frames + f] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  auto pgm_path = stem;
  pgm_path += ".pgm";
  write_file_atomic(pgm_path, pgm);
}

namespace {

template <typename F>
double undefined_as_nan(F&& f) {
  try {
    return f();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

MetricValues compute_metrics(std::span<const double> x, std::span<const double> xhat,
                             const StftResolution& lsd_res) {
  MetricValues m;
  const auto mp = mse_psnr(x, xhat);
  m.mse = mp.mse;
  m.psnr = mp.psnr;
  m.lsd = lsd(x, xhat, lsd_res);
  m.sisnr = undefined_as_nan([&] { return si_snr(x, xhat); });
  m.wd = undefined_as_nan([&] { return spectral_wasserstein(x, xhat); });
  return m;
}

// ---------------------------------------------------------------------------

void MetricsReport::add(MetricsRow row) { rows_.push_back(std::move(row)); }

void MetricsReport::skip(std::string clip_id, std::string reason) {
  skipped_.emplace_back(std::move(clip_id), std::move(reason));
}

std::vector<MetricsAggregate> MetricsReport::aggregates() const {
  std::vector<MetricsAggregate> out;
  for (const auto& row : rows_) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MetricsAggregate& a) { return a.arch == row.arch; });
    if (it == out.end()) {
      out.push_back({row.arch, row.params, 0, {}, {}});
      it = out.end() - 1;
    }
    ++it->count;
  }
  auto fields = [](MetricValues& v) {
    return std::array<double*, 5>{&v.mse, &v.psnr, &v.lsd, &v.sisnr, &v.wd};
  };
  for (auto& agg : out) {
    const double n = static_cast<double>(agg.count);
    auto mean = fields(agg.mean);
    auto sd = fields(agg.stddev);
    for (const auto& row : rows_) {
      if (row.arch != agg.arch) continue;
      auto v = row.values;
      auto f = fields(v);
      for (std::size_t i = 0; i < f.size(); ++i) *mean[i] += *f[i];
    }
    for (auto* m : mean) *m /= n;
    for (const auto& row : rows_) {
      if (row.arch != agg.arch) continue;
      auto v = row.values;
      auto f = fields(v);
      for (std::size_t i = 0; i < f.size(); ++i) *sd[i] += (*f[i] - *mean[i]) * (*f[i] - *mean[i]);
    }
    for (auto* s : sd) *s = std::sqrt(*s / n);
  }
  return out;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "clip_id,arch,params,mse,psnr,lsd,sisnr,wd\n";
  auto line = [&](const std::string& id, const std::string& arch, std::size_t params,
                  const MetricValues& v) {
    os << id << ',' << arch << ',' << params << ',' << fmt(v.mse) << ',' << fmt(v.psnr) << ','
       << fmt(v.lsd) << ',' << fmt(v.sisnr) << ',' << fmt(v.wd) << '\n';
  };
  for (const auto& r : rows_) line(r.clip_id, r.arch, r.params, r.values);
  for (const auto& a : aggregates()) {
    line("mean", a.arch, a.params, a.mean);
    line("std", a.arch, a.params, a.stddev);
  }
  return os.str();
}

std::string MetricsReport::to_table_csv() const {
  std::ostringstream os;
  os << "arch,params,reference_params,clips,mse_mean,mse_std,psnr_mean,psnr_std,lsd_mean,lsd_std,"
        "sisnr_mean,sisnr_std,wd_mean,wd_std\n";
  for (const auto& a : aggregates()) {
    std::size_t reference = 0;
    try {
      reference = reference_param_count(parse_arch(a.arch));
    } catch (const ConfigError&) {
    }
    os << a.arch << ',' << a.params << ',' << reference << ',' << a.count << ','
       << fmt(a.mean.mse) << ',' << fmt(a.stddev.mse) << ',' << fmt(a.mean.psnr) << ','
       << fmt(a.stddev.psnr) << ',' << fmt(a.mean.lsd) << ',' << fmt(a.stddev.lsd) << ','
       << fmt(a.mean.sisnr) << ',' << fmt(a.stddev.sisnr) << ',' << fmt(a.mean.wd) << ','
       << fmt(a.stddev.wd) << '\n';
  }
  return os.str();
}

}  // namespace ainr
