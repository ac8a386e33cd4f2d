#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ainr {

inline constexpr std::uint32_t kDefaultSampleRate = 22050;

struct AudioClip {
  std::uint32_t sample_rate = kDefaultSampleRate;
  std::vector<double> samples;  // mono
  std::string source_id;

  // Throws DomainError on a zero rate or non-finite samples.
  void validate() const;
};

enum class WavFormat { float32, pcm16 };

// RIFF/WAVE, PCM-16 or IEEE float-32, one or two channels (stereo is averaged
// to mono). PCM-16 is scaled by 1/32768. Throws ParseError with the byte
// offset of the problem.
AudioClip wav_parse(std::string_view bytes, std::string source_id = {});
AudioClip wav_read(const std::filesystem::path& path);

// Mono output. PCM-16 rejects samples outside [-1, 1) unless `clamp` is set.
std::string wav_encode(const AudioClip& clip, WavFormat format = WavFormat::float32,
                       bool clamp = false);
void wav_write(const std::filesystem::path& path, const AudioClip& clip,
               WavFormat format = WavFormat::float32, bool clamp = false);

// Polyphase windowed-sinc resampler: Kaiser window (beta 8.555), 64 taps per
// phase, cutoff 0.9 * min(rates) / 2, taps normalised to unit DC gain per
// phase. Returns the clip unchanged when the rates match.
AudioClip resample(const AudioClip& clip, std::uint32_t target_rate = kDefaultSampleRate);

// All *.wav files under `dir` (recursive), sorted by path.
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir);

struct DatasetOptions {
  std::size_t crop_length = 32768;  // 0 keeps full length
  std::uint64_t seed = 0;
  std::uint32_t sample_rate = kDefaultSampleRate;
};

struct Dataset {
  std::vector<AudioClip> clips;
  std::vector<std::string> warnings;  // padded or skipped files
};

// Reads, resamples and randomly crops every WAV under `dir`. Clips shorter
// than the crop are zero-padded; unreadable files are skipped. Both cases add
// a warning. Throws IoError when no clip could be loaded.
Dataset prepare_dataset(const std::filesystem::path& dir, const DatasetOptions& options = {});

}  // namespace ainr
