#include "ainr/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <span>
#include <random>

#include "ainr/error.hpp"
#include "ainr/io_util.hpp"

namespace ainr {

void AudioClip::validate() const {
  if (sample_rate == 0) throw DomainError("audio clip '" + source_id + "' has sample rate 0");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      throw DomainError("audio clip '" + source_id + "' has a non-finite sample at " +
                        std::to_string(i));
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw ParseError("truncated WAV at offset " + std::to_string(pos_) + " while reading " + what);
  }
  std::string_view tag() {
    need(4, "chunk id");
    auto s = bytes_.substr(pos_, 4);
    pos_ += 4;
    return s;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes_[pos_]) |
                                        (static_cast<unsigned char>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { pos_ += std::min(n, remaining()); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

ParseError parse_error(const std::string& msg, std::size_t offset) {
  return ParseError(msg + " at offset " + std::to_string(offset));
}

std::uint32_t load_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

AudioClip wav_parse(std::string_view bytes, std::string source_id) {
  Reader r(bytes);
  if (r.tag() != "RIFF") throw parse_error("missing RIFF tag", 0);
  r.u32("RIFF size");
  if (r.tag() != "WAVE") throw parse_error("missing WAVE tag", 8);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::string_view data;
  std::size_t data_offset = 0;
  bool have_data = false;

  while (r.remaining() >= 8 && !have_data) {
    const std::size_t chunk_at = r.offset();
    const auto id = r.tag();
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw parse_error("fmt chunk too small", chunk_at);
      const std::size_t body = r.offset();
      format = r.u16("format tag");
      channels = r.u16("channel count");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      if (format == kFormatExtensible) {
        if (size < 40) throw parse_error("extensible fmt chunk too small", chunk_at);
        r.u16("extension size");
        r.u16("valid bits");
        r.u32("channel mask");
        auto guid = r.take(16, "sub-format");
        format = static_cast<std::uint16_t>(static_cast<unsigned char>(guid[0]) |
                                            (static_cast<unsigned char>(guid[1]) << 8));
      }
      const std::size_t used = r.offset() - body;
      r.need(size - used, "fmt chunk");
      r.skip(size - used + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw parse_error("data chunk before fmt chunk", chunk_at);
      data_offset = r.offset();
      data = r.take(size, "sample data");
      have_data = true;
    } else {
      r.need(size, "chunk body");
      r.skip(size + (size & 1));
    }
  }
  if (!have_fmt) throw parse_error("no fmt chunk", r.offset());
  if (!have_data) throw parse_error("no data chunk", r.offset());
  if (channels < 1 || channels > 2)
    throw parse_error("unsupported channel count " + std::to_string(channels), 22);
  if (rate == 0) throw parse_error("sample rate 0", 24);

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw parse_error("unsupported codec (format " + std::to_string(format) + ", " +
                          std::to_string(bits) + " bits)",
                      20);

  const std::size_t width = bits / 8;
  const std::size_t frame = width * channels;
  if (data.size() % frame != 0)
    throw parse_error("data size is not a multiple of the frame size", data_offset);

  AudioClip clip;
  clip.sample_rate = rate;
  clip.source_id = std::move(source_id);
  const std::size_t n = data.size() / frame;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data.data() + i * frame + c * width;
      double v;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(static_cast<unsigned char>(p[0]) |
                                                   (static_cast<unsigned char>(p[1]) << 8));
        v = static_cast<double>(raw) / 32768.0;
      } else {
        v = static_cast<double>(std::bit_cast<float>(load_u32(p)));
        if (!std::isfinite(v))
          throw parse_error("non-finite float sample", data_offset + i * frame + c * width);
      }
      acc += v;
    }
    clip.samples[i] = channels == 2 ? acc * 0.5 : acc;
  }
  return clip;
}

AudioClip wav_read(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return wav_parse(bytes, path.string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string wav_encode(const AudioClip& clip, WavFormat format, bool clamp) {
  clip.validate();
  const bool pcm = format == WavFormat::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t width = bits / 8;
  const std::uint64_t data_size = clip.samples.size() * width;
  if (data_size + 36 > 0xFFFFFFFFull) throw IoError("clip too long for a RIFF file");

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, clip.sample_rate);
  put_u32(out, clip.sample_rate * width);
  put_u16(out, static_cast<std::uint16_t>(width));
  put_u16(out, bits);
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    double s = clip.samples[i];
    if (pcm) {
      if (clamp) s = std::clamp(s, -1.0, 32767.0 / 32768.0);
      if (s < -1.0 || s > 32767.0 / 32768.0)
        throw DomainError("sample " + std::to_string(i) + " outside PCM-16 range; use clamping");
      const auto q = static_cast<std::int16_t>(std::lround(s * 32768.0));
      put_u16(out, static_cast<std::uint16_t>(q));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }
  return out;
}

void wav_write(const std::filesystem::path& path, const AudioClip& clip, WavFormat format,
               bool clamp) {
  write_file_atomic(path, wav_encode(clip, format, clamp));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kTaps = 64;
constexpr double kKaiserBeta = 8.555;
constexpr std::size_t kMaxTablePhases = 4096;

double kaiser(double x) {  // x in [-1, 1]
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Taps for one output phase; tap j multiplies input sample base - kTaps/2 + 1 + j,
// where the output time sits `frac` input samples after `base`.
void phase_taps(double frac, double cutoff, std::span<double> taps) {
  constexpr double half = kTaps / 2.0;
  double total = 0.0;
  for (std::size_t j = 0; j < kTaps; ++j) {
    const double tau = frac + half - 1.0 - static_cast<double>(j);
    taps[j] = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * kaiser(tau / half);
    total += taps[j];
  }
  for (auto& t : taps) t /= total;
}

}  // namespace

AudioClip resample(const AudioClip& clip, std::uint32_t target_rate) {
  if (target_rate == 0) throw ConfigError("target sample rate must be positive");
  if (clip.sample_rate == 0) throw DomainError("source sample rate is 0");
  if (clip.sample_rate == target_rate) return clip;

  const std::uint64_t g = std::gcd<std::uint64_t>(clip.sample_rate, target_rate);
  const std::uint64_t up = target_rate / g, down = clip.sample_rate / g;
  // Cutoff in cycles per input sample.
  const double cutoff = 0.9 * std::min(clip.sample_rate, target_rate) / 2.0 / clip.sample_rate;

  const std::size_t n = clip.samples.size();
  const std::size_t out_n = static_cast<std::size_t>((static_cast<std::uint64_t>(n) * up + down - 1) / down);

  std::vector<double> table;
  const bool tabulated = up <= kMaxTablePhases;
  if (tabulated) {
    table.resize(up * kTaps);
    for (std::uint64_t p = 0; p < up; ++p)
      phase_taps(static_cast<double>(p) / static_cast<double>(up), cutoff,
                 std::span<double>(table.data() + p * kTaps, kTaps));
  }

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(out_n);
  std::vector<double> scratch(kTaps);
  const auto& x = clip.samples;
  for (std::size_t k = 0; k < out_n; ++k) {
    const std::uint64_t pos = static_cast<std::uint64_t>(k) * down;
    const std::uint64_t base = pos / up, phase = pos % up;
    std::span<const double> taps;
    if (tabulated) {
      taps = std::span<const double>(table.data() + phase * kTaps, kTaps);
    } else {
      phase_taps(static_cast<double>(phase) / static_cast<double>(up), cutoff, scratch);
      taps = scratch;
    }
    const std::int64_t first = static_cast<std::int64_t>(base) - static_cast<std::int64_t>(kTaps / 2) + 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < kTaps; ++j) {
      const std::int64_t idx = first + static_cast<std::int64_t>(j);
      if (idx >= 0 && idx < static_cast<std::int64_t>(n)) acc += taps[j] * x[static_cast<std::size_t>(idx)];
    }
    out.samples[k] = acc;
  }
  return out;
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dataset prepare_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  const auto files = list_wavs(dir);
  if (files.empty()) throw IoError("no WAV files under " + dir.string());
  Dataset ds;
  std::mt19937_64 rng(options.seed);
  for (const auto& path : files) {
    AudioClip clip;
    try {
      clip = resample(wav_read(path), options.sample_rate);
    } catch (const Error& e) {
      ds.warnings.push_back("skipped " + path.string() + ": " + e.what());
      continue;
    }
    const std::size_t crop = options.crop_length;
    if (crop > 0) {
      if (clip.samples.size() < crop) {
        ds.warnings.push_back("zero-padded " + path.string() + " from " +
                              std::to_string(clip.samples.size()) + " to " + std::to_string(crop) +
                              " samples");
        clip.samples.resize(crop, 0.0);
      } else {
        std::uniform_int_distribution<std::size_t> start(0, clip.samples.size() - crop);
        const std::size_t s = start(rng);
        clip.samples = std::vector<double>(clip.samples.begin() + static_cast<std::ptrdiff_t>(s),
                                           clip.samples.begin() + static_cast<std::ptrdiff_t>(s + crop));
      }
    }
    ds.clips.push_back(std::move(clip));
  }
  if (ds.clips.empty()) throw IoError("no readable WAV files under " + dir.string());
  return ds;
}

}  // namespace ainr
