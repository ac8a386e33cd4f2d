#pragma once

// Binary model files. All integers and floats are little-endian.
//
//   offset  size  field
//   0       5     magic "AINR1"
//   5       1     kind: 0 = INR model, 1 = FewSound state
//   6       2     format version (u16, currently 1)
//   8       1     arch tag of the (target) INR
//   9       ...   INR config block:
//                   u32 hidden layer count, u64 per width,
//                   u64 encoding_length, u64 rff_features, f64 rff_sigma,
//                   f64 omega0, f64 wire_scale, f64 finer_bias_bound,
//                   u64 grid_size, u64 spline_order, u8 scale_spline,
//                   f64 spline_lo, f64 spline_hi, u64 seed
//   kind 0: u64 parameter count, then that many f64 in flatten order
//   kind 1: FewSound config block:
//                   u64 window, u64 embedding_dim, u64 stem_channels,
//                   u32 block count, u64 per block, u64 kernel,
//                   u64 weight_encoder_hidden, u32 hyper layer count, u64 per
//                   layer, f64 lambda_time, f64 lambda_freq, u64 epochs,
//                   u64 batch_size, f64 lr, f64 weight_decay,
//                   f64 warmup_fraction, f64 div_factor, f64 final_div_factor,
//                   u64 seed, u32 sample_rate
//           then four groups gamma, delta, eta, theta, each u64 count + f64s
//   end     4     CRC-32 (zlib polynomial) of every preceding byte
//
// Every block carries all INR config fields whatever the architecture; the
// RFF projection is re-derived from the seed and never stored.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ainr/fewsound.hpp"
#include "ainr/inr.hpp"

namespace ainr {

inline constexpr std::uint16_t kModelFileVersion = 1;

enum class FileKind : std::uint8_t { model = 0, fewsound_state = 1 };

std::string encode_model(const InrModel& model);
std::string encode_state(const FewSoundState& state);

// Throw ParseError on bad magic, version, kind, length or CRC.
InrModel decode_model(std::string_view bytes);
FewSoundState decode_state(std::string_view bytes);
FileKind peek_kind(std::string_view bytes);

// Atomic (temp file + rename).
void save_model(const std::filesystem::path& path, const InrModel& model);
void save_state(const std::filesystem::path& path, const FewSoundState& state);
InrModel load_model(const std::filesystem::path& path);
FewSoundState load_state(const std::filesystem::path& path);

// Size in bytes of a kind-0 file for this config.
std::size_t model_file_size(const InrConfig& config);

}  // namespace ainr
