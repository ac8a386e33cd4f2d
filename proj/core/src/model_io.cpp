#include "ainr/model_io.hpp"

#include <zlib.h>

#include <bit>

#include "ainr/error.hpp"
#include "ainr/io_util.hpp"

namespace ainr {

namespace {

constexpr std::string_view kMagic = "AINR1";
constexpr std::size_t kCrcBytes = 4;

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  std::string& str() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(get(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(get(8, what)); }
  std::size_t size(const char* what, std::size_t elem) {
    const std::uint64_t n = u64(what);
    if (n > remaining() / elem)
      throw ParseError(std::string(what) + " " + std::to_string(n) + " exceeds the file at offset " +
                       std::to_string(pos_ - 8));
    return static_cast<std::size_t>(n);
  }
  std::vector<double> f64s(const char* what) {
    const std::size_t n = size(what, 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64(what);
    return v;
  }
  std::vector<std::size_t> widths(const char* what) {
    const std::uint32_t n = u32(what);
    if (n > remaining() / 8) throw ParseError(std::string("bad ") + what + " count");
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = static_cast<std::size_t>(u64(what));
    return v;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw ParseError("truncated model file at offset " + std::to_string(pos_) + " (" + what + ")");
  }
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_header(Writer& w, FileKind kind, Arch arch) {
  w.bytes(kMagic);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u16(kModelFileVersion);
  w.u8(static_cast<std::uint8_t>(arch));
}

void write_config(Writer& w, const InrConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.layers.size()));
  for (auto l : c.layers) w.u64(l);
  w.u64(c.encoding_length);
  w.u64(c.rff_features);
  w.f64(c.rff_sigma);
  w.f64(c.omega0);
  w.f64(c.wire_scale);
  w.f64(c.finer_bias_bound);
  w.u64(c.grid_size);
  w.u64(c.spline_order);
  w.u8(c.scale_spline ? 1 : 0);
  w.f64(c.spline_lo);
  w.f64(c.spline_hi);
  w.u64(c.seed);
}

InrConfig read_config(Reader& r, Arch arch) {
  InrConfig c;
  c.arch = arch;
  c.layers = r.widths("layer widths");
  c.encoding_length = r.u64("encoding length");
  c.rff_features = r.u64("rff features");
  c.rff_sigma = r.f64("rff sigma");
  c.omega0 = r.f64("omega0");
  c.wire_scale = r.f64("wire scale");
  c.finer_bias_bound = r.f64("finer bias bound");
  c.grid_size = r.u64("grid size");
  c.spline_order = r.u64("spline order");
  const auto scale = r.u8("scale flag");
  if (scale > 1) throw ParseError("bad scale_spline flag at offset " + std::to_string(r.offset() - 1));
  c.scale_spline = scale == 1;
  c.spline_lo = r.f64("spline lo");
  c.spline_hi = r.f64("spline hi");
  c.seed = r.u64("seed");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid stored config: ") + e.what());
  }
  return c;
}

void write_fewsound_config(Writer& w, const FewSoundConfig& c) {
  w.u64(c.window);
  w.u64(c.embedding_dim);
  w.u64(c.stem_channels);
  w.u32(static_cast<std::uint32_t>(c.block_channels.size()));
  for (auto b : c.block_channels) w.u64(b);
  w.u64(c.kernel);
  w.u64(c.weight_encoder_hidden);
  w.u32(static_cast<std::uint32_t>(c.hyper_hidden.size()));
  for (auto h : c.hyper_hidden) w.u64(h);
  w.f64(c.lambda_time);
  w.f64(c.lambda_freq);
  w.u64(c.epochs);
  w.u64(c.batch_size);
  w.f64(c.lr);
  w.f64(c.weight_decay);
  w.f64(c.warmup_fraction);
  w.f64(c.div_factor);
  w.f64(c.final_div_factor);
  w.u64(c.seed);
  w.u32(c.sample_rate);
}

FewSoundConfig read_fewsound_config(Reader& r, InrConfig target) {
  FewSoundConfig c;
  c.target = std::move(target);
  c.window = r.u64("window");
  c.embedding_dim = r.u64("embedding dim");
  c.stem_channels = r.u64("stem channels");
  c.block_channels = r.widths("block channels");
  c.kernel = r.u64("kernel");
  c.weight_encoder_hidden = r.u64("weight encoder width");
  c.hyper_hidden = r.widths("hypernetwork widths");
  c.lambda_time = r.f64("lambda_time");
  c.lambda_freq = r.f64("lambda_freq");
  c.epochs = r.u64("epochs");
  c.batch_size = r.u64("batch size");
  c.lr = r.f64("lr");
  c.weight_decay = r.f64("weight decay");
  c.warmup_fraction = r.f64("warmup fraction");
  c.div_factor = r.f64("div factor");
  c.final_div_factor = r.f64("final div factor");
  c.seed = r.u64("seed");
  c.sample_rate = r.u32("sample rate");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid stored FewSound config: ") + e.what());
  }
  return c;
}

void finish(Writer& w) { w.u32(crc32_of(w.str())); }

// Checks magic, version, kind and CRC; returns a reader positioned after the
// arch byte and the arch itself.
std::pair<Reader, Arch> open(std::string_view bytes, FileKind expected) {
  if (bytes.size() < kMagic.size() + 4 + kCrcBytes)
    throw ParseError("model file too short (" + std::to_string(bytes.size()) + " bytes)");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw ParseError("bad magic at offset 0");
  const auto body = bytes.substr(0, bytes.size() - kCrcBytes);
  Reader tail(bytes.substr(bytes.size() - kCrcBytes));
  const std::uint32_t stored = tail.u32("crc");
  if (stored != crc32_of(body))
    throw ParseError("CRC mismatch (file truncated or corrupted)");

  Reader r(body);
  r.bytes(kMagic.size(), "magic");
  const auto kind = r.u8("kind");
  if (kind != static_cast<std::uint8_t>(expected))
    throw ParseError("file kind " + std::to_string(kind) + " at offset 5, expected " +
                     std::to_string(static_cast<int>(expected)));
  const auto version = r.u16("version");
  if (version != kModelFileVersion)
    throw ParseError("unsupported format version " + std::to_string(version) + " at offset 6");
  const auto tag = r.u8("arch");
  if (tag > static_cast<std::uint8_t>(Arch::kan))
    throw ParseError("unknown arch tag " + std::to_string(tag) + " at offset 8");
  return {r, static_cast<Arch>(tag)};
}

void expect_end(const Reader& r) {
  if (r.remaining() != 0)
    throw ParseError(std::to_string(r.remaining()) + " trailing bytes at offset " +
                     std::to_string(r.offset()));
}

}  // namespace

std::string encode_model(const InrModel& model) {
  Writer w;
  write_header(w, FileKind::model, model.config().arch);
  write_config(w, model.config());
  w.f64s(model.flatten());
  finish(w);
  return std::move(w.str());
}

std::string encode_state(const FewSoundState& state) {
  state.validate();
  Writer w;
  write_header(w, FileKind::fewsound_state, state.config.target.arch);
  write_config(w, state.config.target);
  write_fewsound_config(w, state.config);
  w.f64s(state.gamma);
  w.f64s(state.delta);
  w.f64s(state.eta);
  w.f64s(state.theta);
  finish(w);
  return std::move(w.str());
}

FileKind peek_kind(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 1 || bytes.substr(0, kMagic.size()) != kMagic)
    throw ParseError("bad magic at offset 0");
  const auto k = static_cast<std::uint8_t>(bytes[kMagic.size()]);
  if (k > 1) throw ParseError("unknown file kind " + std::to_string(k) + " at offset 5");
  return static_cast<FileKind>(k);
}

InrModel decode_model(std::string_view bytes) {
  auto [r, arch] = open(bytes, FileKind::model);
  const InrConfig config = read_config(r, arch);
  const auto params = r.f64s("parameter count");
  expect_end(r);
  if (params.size() != param_count(config))
    throw ParseError("parameter count " + std::to_string(params.size()) + " does not match config (" +
                     std::to_string(param_count(config)) + ")");
  return InrModel::unflatten(config, params);
}

FewSoundState decode_state(std::string_view bytes) {
  auto [r, arch] = open(bytes, FileKind::fewsound_state);
  FewSoundState s;
  s.config = read_fewsound_config(r, read_config(r, arch));
  s.gamma = r.f64s("gamma count");
  s.delta = r.f64s("delta count");
  s.eta = r.f64s("eta count");
  s.theta = r.f64s("theta count");
  expect_end(r);
  try {
    s.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent FewSound state: ") + e.what());
  }
  return s;
}

void save_model(const std::filesystem::path& path, const InrModel& model) {
  write_file_atomic(path, encode_model(model));
}

void save_state(const std::filesystem::path& path, const FewSoundState& state) {
  write_file_atomic(path, encode_state(state));
}

InrModel load_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

FewSoundState load_state(const std::filesystem::path& path) {
  try {
    return decode_state(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::size_t model_file_size(const InrConfig& config) {
  const std::size_t header = kMagic.size() + 1 + 2 + 1;
  const std::size_t block = 4 + 8 * config.layers.size() + 8 + 8 + 8 + 8 + 8 + 8 + 8 + 8 + 1 + 8 +
                            8 + 8;
  return header + block + 8 + 8 * param_count(config) + kCrcBytes;
}

}  // namespace ainr
