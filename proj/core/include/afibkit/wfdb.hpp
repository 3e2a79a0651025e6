#pragma once

// Readers for PhysioNet WFDB records: `.hea` headers, format 212/16 signal
// files and MIT-format annotation files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afibkit::wfdb {

inline constexpr double kDefaultSamplingHz = 250.0;
inline constexpr double kDefaultGain = 200.0;

struct SignalSpec {
  std::string file_name;
  int format_code = 212;
  std::size_t byte_offset = 0;
  double gain = kDefaultGain;  // adu per mV
  int baseline = 0;            // adu
  std::string units = "mV";
  int adc_resolution = 12;
  int adc_zero = 0;
  int initial_value = 0;
  std::optional<std::int16_t> checksum;
  std::string description;
};

struct RecordHeader {
  std::string record_name;
  std::size_t num_signals = 0;
  double sampling_hz = kDefaultSamplingHz;
  std::size_t num_samples = 0;
  bool num_samples_declared = false;
  std::vector<SignalSpec> signals;
};

struct Record {
  RecordHeader header;
  std::vector<std::vector<int>> channels;  // adu, one vector per signal
  std::vector<std::string> warnings;

  // (adu - baseline) / gain for one channel.
  std::vector<double> millivolts(std::size_t channel) const;
};

// Annotation codes with special meaning in the MIT format.
inline constexpr int kCodeRhythm = 28;
inline constexpr int kCodeSkip = 59;
inline constexpr int kCodeNum = 60;
inline constexpr int kCodeSub = 61;
inline constexpr int kCodeChan = 62;
inline constexpr int kCodeAux = 63;

struct Annotation {
  std::size_t sample_index = 0;
  int code = 0;
  std::optional<std::string> aux;
};

struct AnnotationSet {
  double sampling_hz = kDefaultSamplingHz;
  std::vector<Annotation> annotations;
};

enum class Rhythm { kAfib, kOther };

struct RhythmInterval {
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;
  Rhythm rhythm = Rhythm::kOther;

  friend bool operator==(const RhythmInterval&, const RhythmInterval&) = default;
};

enum class ChecksumPolicy { kError, kWarn };

RecordHeader parse_header(std::string_view text);

std::vector<std::vector<int>> decode_format212(std::span<const std::uint8_t> bytes,
                                               std::size_t samples_per_channel,
                                               std::size_t channels = 2);
std::vector<std::vector<int>> decode_format16(std::span<const std::uint8_t> bytes,
                                              std::size_t samples_per_channel,
                                              std::size_t channels);

// Inverse of decode_format212. Values are truncated to 12 bits.
std::vector<std::uint8_t> encode_format212(const std::vector<std::vector<int>>& channels);

Record read_record(const RecordHeader& header, std::span<const std::uint8_t> dat_bytes,
                   ChecksumPolicy policy = ChecksumPolicy::kError);

AnnotationSet parse_annotations(std::span<const std::uint8_t> bytes,
                                double sampling_hz = kDefaultSamplingHz);

std::vector<RhythmInterval> rhythm_intervals(const AnnotationSet& ann,
                                             std::size_t num_samples);

std::size_t afib_sample_count(const std::vector<RhythmInterval>& intervals);

// File helpers. `record_path` is the path without extension, e.g. "data/afdb/04015".
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
Record load_record(const std::filesystem::path& record_path,
                   ChecksumPolicy policy = ChecksumPolicy::kError);
AnnotationSet load_annotations(const std::filesystem::path& record_path,
                               double sampling_hz, std::string_view extension = "atr");

}  // namespace afibkit::wfdb
