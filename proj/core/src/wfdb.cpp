#include "afibkit/wfdb.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "afibkit/error.hpp"

namespace afibkit::wfdb {
namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Parses a leading number from `tok` and returns the unparsed tail.
template <typename T>
std::string_view leading_number(std::string_view tok, T& value, std::string_view what) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr == first) {
    throw Error(ErrorCode::kMalformedHeader,
                "non-numeric " + std::string(what) + " '" + std::string(tok) + "'");
  }
  return tok.substr(static_cast<std::size_t>(ptr - tok.data()));
}

template <typename T>
T whole_number(std::string_view tok, std::string_view what) {
  T value{};
  if (!leading_number(tok, value, what).empty()) {
    throw Error(ErrorCode::kMalformedHeader,
                "non-numeric " + std::string(what) + " '" + std::string(tok) + "'");
  }
  return value;
}

SignalSpec parse_signal_line(const std::vector<std::string_view>& tok) {
  if (tok.size() < 2) {
    throw Error(ErrorCode::kMalformedHeader, "signal line needs at least file name and format");
  }
  SignalSpec sig;
  sig.file_name = std::string(tok[0]);

  // format[xsamps][:skew][+offset]
  int format = 0;
  std::string_view rest = leading_number(tok[1], format, "format");
  while (!rest.empty()) {
    const char tag = rest.front();
    rest.remove_prefix(1);
    long long value = 0;
    rest = leading_number(rest, value, "format modifier");
    if (tag == 'x' && value != 1) {
      throw Error(ErrorCode::kUnsupportedFormat, "multi-sample frames are not supported");
    } else if (tag == '+') {
      sig.byte_offset = static_cast<std::size_t>(value);
    } else if (tag != ':' && tag != 'x') {
      throw Error(ErrorCode::kMalformedHeader, "bad format token '" + std::string(tok[1]) + "'");
    }
  }
  if (format != 212 && format != 16) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "format " + std::to_string(format) + " (only 212 and 16 are supported)");
  }
  sig.format_code = format;
  sig.adc_resolution = format == 212 ? 12 : 16;

  bool baseline_given = false;
  if (tok.size() > 2) {
    // gain[(baseline)][/units]
    double gain = 0.0;
    std::string_view tail = leading_number(tok[2], gain, "gain");
    if (!tail.empty() && tail.front() == '(') {
      tail.remove_prefix(1);
      int baseline = 0;
      tail = leading_number(tail, baseline, "baseline");
      if (tail.empty() || tail.front() != ')') {
        throw Error(ErrorCode::kMalformedHeader, "unterminated baseline in '" + std::string(tok[2]) + "'");
      }
      tail.remove_prefix(1);
      sig.baseline = baseline;
      baseline_given = true;
    }
    if (!tail.empty() && tail.front() == '/') sig.units = std::string(tail.substr(1));
    sig.gain = gain == 0.0 ? kDefaultGain : gain;
    if (sig.gain < 0.0) throw Error(ErrorCode::kMalformedHeader, "negative gain");
  }
  if (tok.size() > 3) sig.adc_resolution = whole_number<int>(tok[3], "adc resolution");
  if (tok.size() > 4) sig.adc_zero = whole_number<int>(tok[4], "adc zero");
  if (tok.size() > 5) sig.initial_value = whole_number<int>(tok[5], "initial value");
  if (tok.size() > 6) {
    const long long cs = whole_number<long long>(tok[6], "checksum");
    sig.checksum = static_cast<std::int16_t>(static_cast<std::uint16_t>(cs & 0xFFFF));
  }
  if (tok.size() > 7) (void)whole_number<long long>(tok[7], "block size");
  if (tok.size() > 8) {
    std::string desc;
    for (std::size_t i = 8; i < tok.size(); ++i) {
      if (!desc.empty()) desc += ' ';
      desc += tok[i];
    }
    sig.description = desc;
  }
  if (!baseline_given) sig.baseline = sig.adc_zero;
  return sig;
}

void require_bytes(std::span<const std::uint8_t> bytes, std::size_t needed) {
  if (bytes.size() < needed) {
    throw Error(ErrorCode::kTruncatedSignal, "need " + std::to_string(needed) + " bytes, have " +
                                                 std::to_string(bytes.size()));
  }
}

int sign_extend12(int v) { return v >= 2048 ? v - 4096 : v; }

}  // namespace

std::vector<double> Record::millivolts(std::size_t channel) const {
  if (channel >= channels.size()) {
    throw Error(ErrorCode::kChannelOutOfRange,
                "channel " + std::to_string(channel) + " of " + std::to_string(channels.size()));
  }
  const SignalSpec& sig = header.signals[channel];
  const auto& adu = channels[channel];
  std::vector<double> out(adu.size());
  for (std::size_t i = 0; i < adu.size(); ++i) {
    out[i] = static_cast<double>(adu[i] - sig.baseline) / sig.gain;
  }
  return out;
}

RecordHeader parse_header(std::string_view text) {
  std::vector<std::vector<std::string_view>> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = split_tokens(line);
    if (!tok.empty()) lines.push_back(std::move(tok));
  }
  if (lines.empty()) throw Error(ErrorCode::kMalformedHeader, "empty header");

  const auto& rec = lines.front();
  if (rec.size() < 2) throw Error(ErrorCode::kMalformedHeader, "record line needs name and signal count");

  RecordHeader h;
  h.record_name = std::string(rec[0]);
  if (h.record_name.find('/') != std::string::npos) {
    throw Error(ErrorCode::kUnsupportedFormat, "multi-segment records are not supported");
  }
  h.num_signals = whole_number<std::size_t>(rec[1], "signal count");
  if (h.num_signals == 0) throw Error(ErrorCode::kMalformedHeader, "record declares no signals");

  if (rec.size() > 2) {
    // fs[/counter_freq[(base_counter)]]
    double fs = 0.0;
    std::string_view tail = leading_number(rec[2], fs, "sampling frequency");
    if (!tail.empty() && tail.front() != '/' && tail.front() != '(') {
      throw Error(ErrorCode::kMalformedHeader, "bad sampling frequency '" + std::string(rec[2]) + "'");
    }
    if (fs < 0.0) throw Error(ErrorCode::kMalformedHeader, "negative sampling frequency");
    h.sampling_hz = fs == 0.0 ? kDefaultSamplingHz : fs;
  }
  if (rec.size() > 3) {
    h.num_samples = whole_number<std::size_t>(rec[3], "sample count");
    h.num_samples_declared = true;
  }

  if (lines.size() - 1 < h.num_signals) {
    throw Error(ErrorCode::kMalformedHeader, "expected " + std::to_string(h.num_signals) +
                                                 " signal lines, found " +
                                                 std::to_string(lines.size() - 1));
  }
  for (std::size_t s = 0; s < h.num_signals; ++s) h.signals.push_back(parse_signal_line(lines[s + 1]));
  return h;
}

std::vector<std::vector<int>> decode_format212(std::span<const std::uint8_t> bytes,
                                               std::size_t samples_per_channel,
                                               std::size_t channels) {
  if (channels == 0) throw Error(ErrorCode::kMalformedHeader, "zero channels");
  const std::size_t total = samples_per_channel * channels;
  require_bytes(bytes, (total * 3 + 1) / 2);

  std::vector<std::vector<int>> out(channels, std::vector<int>(samples_per_channel));
  std::size_t k = 0;  // index into the interleaved stream
  auto emit = [&](int v) {
    out[k % channels][k / channels] = sign_extend12(v);
    ++k;
  };
  for (std::size_t g = 0; k < total; g += 3) {
    const int b0 = bytes[g];
    const int b1 = bytes[g + 1];
    emit(b0 | ((b1 & 0x0F) << 8));
    if (k < total) emit(bytes[g + 2] | ((b1 & 0xF0) << 4));
  }
  return out;
}

std::vector<std::vector<int>> decode_format16(std::span<const std::uint8_t> bytes,
                                              std::size_t samples_per_channel,
                                              std::size_t channels) {
  if (channels == 0) throw Error(ErrorCode::kMalformedHeader, "zero channels");
  const std::size_t total = samples_per_channel * channels;
  require_bytes(bytes, total * 2);
  std::vector<std::vector<int>> out(channels, std::vector<int>(samples_per_channel));
  for (std::size_t k = 0; k < total; ++k) {
    const auto v = static_cast<std::uint16_t>(bytes[2 * k] | (bytes[2 * k + 1] << 8));
    out[k % channels][k / channels] = static_cast<std::int16_t>(v);
  }
  return out;
}

std::vector<std::uint8_t> encode_format212(const std::vector<std::vector<int>>& channels) {
  if (channels.empty()) return {};
  const std::size_t n = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != n) throw Error(ErrorCode::kLengthMismatch, "channels differ in length");
  }
  const std::size_t total = n * channels.size();
  std::vector<std::uint8_t> out;
  out.reserve((total * 3 + 1) / 2);
  auto sample = [&](std::size_t k) { return channels[k % channels.size()][k / channels.size()] & 0xFFF; };
  for (std::size_t k = 0; k < total; k += 2) {
    const int s1 = sample(k);
    if (k + 1 < total) {
      const int s2 = sample(k + 1);
      out.push_back(static_cast<std::uint8_t>(s1 & 0xFF));
      out.push_back(static_cast<std::uint8_t>(((s1 >> 8) & 0x0F) | ((s2 >> 4) & 0xF0)));
      out.push_back(static_cast<std::uint8_t>(s2 & 0xFF));
    } else {
      out.push_back(static_cast<std::uint8_t>(s1 & 0xFF));
      out.push_back(static_cast<std::uint8_t>((s1 >> 8) & 0x0F));
    }
  }
  return out;
}

Record read_record(const RecordHeader& header, std::span<const std::uint8_t> dat_bytes,
                   ChecksumPolicy policy) {
  if (header.signals.size() != header.num_signals || header.num_signals == 0) {
    throw Error(ErrorCode::kMalformedHeader, "signal specs do not match signal count");
  }
  const SignalSpec& first = header.signals.front();
  for (const auto& sig : header.signals) {
    if (sig.file_name != first.file_name || sig.format_code != first.format_code ||
        sig.byte_offset != first.byte_offset) {
      throw Error(ErrorCode::kUnsupportedFormat,
                  "all signals must share one signal file, format and offset");
    }
  }
  if (first.byte_offset > dat_bytes.size()) {
    throw Error(ErrorCode::kTruncatedSignal, "byte offset beyond end of signal file");
  }
  const auto payload = dat_bytes.subspan(first.byte_offset);
  const std::size_t nsig = header.num_signals;

  Record rec;
  rec.header = header;
  std::size_t n = header.num_samples;
  if (!header.num_samples_declared) {
    n = first.format_code == 212 ? (payload.size() * 2 / 3) / nsig : payload.size() / 2 / nsig;
    rec.header.num_samples = n;
    rec.header.num_samples_declared = true;
  }
  rec.channels = first.format_code == 212 ? decode_format212(payload, n, nsig)
                                          : decode_format16(payload, n, nsig);

  for (std::size_t c = 0; c < nsig; ++c) {
    const auto& expected = header.signals[c].checksum;
    if (!expected) continue;
    std::uint16_t sum = 0;
    for (int v : rec.channels[c]) sum = static_cast<std::uint16_t>(sum + static_cast<std::uint16_t>(v));
    const auto got = static_cast<std::int16_t>(sum);
    if (got != *expected) {
      const std::string msg = "channel " + std::to_string(c) + ": expected " +
                              std::to_string(*expected) + ", got " + std::to_string(got);
      if (policy == ChecksumPolicy::kError) throw Error(ErrorCode::kChecksumMismatch, msg);
      rec.warnings.push_back("checksum mismatch on " + msg);
    }
  }
  return rec;
}

AnnotationSet parse_annotations(std::span<const std::uint8_t> bytes, double sampling_hz) {
  AnnotationSet set;
  set.sampling_hz = sampling_hz;
  std::size_t time = 0;
  std::size_t i = 0;
  auto word_at = [&](std::size_t at) {
    return static_cast<unsigned>(bytes[at] | (bytes[at + 1] << 8));
  };

  while (true) {
    if (i + 2 > bytes.size()) {
      throw Error(ErrorCode::kMalformedAnnotation, "missing terminator at byte " + std::to_string(i));
    }
    const unsigned word = word_at(i);
    i += 2;
    if (word == 0) break;
    const int code = static_cast<int>(word >> 10);
    const unsigned delta = word & 0x3FF;

    switch (code) {
      case kCodeSkip: {
        if (i + 4 > bytes.size()) throw Error(ErrorCode::kMalformedAnnotation, "truncated SKIP");
        // PDP-11 long: high 16-bit word first, each word little-endian.
        const std::uint32_t hi = word_at(i);
        const std::uint32_t lo = word_at(i + 2);
        const auto skip = static_cast<std::int32_t>((hi << 16) | lo);
        i += 4;
        if (skip < 0 && static_cast<std::size_t>(-static_cast<std::int64_t>(skip)) > time) {
          throw Error(ErrorCode::kMalformedAnnotation, "SKIP moves before sample 0");
        }
        time = static_cast<std::size_t>(static_cast<std::int64_t>(time) + skip);
        break;
      }
      case kCodeNum:
      case kCodeSub:
      case kCodeChan:
        break;
      case kCodeAux: {
        const std::size_t len = delta;
        const std::size_t padded = len + (len & 1);
        if (i + padded > bytes.size()) {
          throw Error(ErrorCode::kMalformedAnnotation, "aux string overruns buffer");
        }
        if (set.annotations.empty()) {
          throw Error(ErrorCode::kMalformedAnnotation, "aux string without a preceding annotation");
        }
        std::string aux(reinterpret_cast<const char*>(bytes.data() + i), len);
        while (!aux.empty() && aux.back() == '\0') aux.pop_back();
        set.annotations.back().aux = std::move(aux);
        i += padded;
        break;
      }
      default:
        time += delta;
        if (code != 0) set.annotations.push_back(Annotation{time, code, std::nullopt});
        break;
    }
  }
  return set;
}

std::vector<RhythmInterval> rhythm_intervals(const AnnotationSet& ann, std::size_t num_samples) {
  std::vector<RhythmInterval> out;
  auto append = [&](std::size_t start, std::size_t end, Rhythm r) {
    if (start >= end) return;
    if (!out.empty() && out.back().rhythm == r && out.back().end_sample == start) {
      out.back().end_sample = end;
    } else {
      out.push_back({start, end, r});
    }
  };

  std::size_t cursor = 0;
  Rhythm current = Rhythm::kOther;
  for (const auto& a : ann.annotations) {
    if (a.code != kCodeRhythm || !a.aux || a.aux->empty() || a.aux->front() != '(') continue;
    const std::size_t at = std::min(a.sample_index, num_samples);
    append(cursor, at, current);
    cursor = std::max(cursor, at);
    current = a.aux->rfind("(AFIB", 0) == 0 ? Rhythm::kAfib : Rhythm::kOther;
  }
  append(cursor, num_samples, current);
  return out;
}

std::size_t afib_sample_count(const std::vector<RhythmInterval>& intervals) {
  std::size_t total = 0;
  for (const auto& iv : intervals) {
    if (iv.rhythm == Rhythm::kAfib) total += iv.end_sample - iv.start_sample;
  }
  return total;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Record load_record(const std::filesystem::path& record_path, ChecksumPolicy policy) {
  auto hea_path = record_path;
  hea_path += ".hea";
  const auto text = read_file_bytes(hea_path);
  const RecordHeader header =
      parse_header(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
  const auto dat = read_file_bytes(record_path.parent_path() / header.signals.front().file_name);
  return read_record(header, dat, policy);
}

AnnotationSet load_annotations(const std::filesystem::path& record_path, double sampling_hz,
                               std::string_view extension) {
  auto path = record_path;
  path += ".";
  path += extension;
  return parse_annotations(read_file_bytes(path), sampling_hz);
}

}  // namespace afibkit::wfdb
