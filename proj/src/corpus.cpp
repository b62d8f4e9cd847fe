#include "kt/corpus.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kt {

namespace {

constexpr std::array<std::pair<Modality, std::string_view>, 5> kModalityNames{{
    {Modality::Text, "text"},
    {Modality::Dna, "dna"},
    {Modality::Audio16, "audio16"},
    {Modality::Audio8, "audio8"},
    {Modality::Raw, "raw"},
}};

ByteSeq read_bytes(const std::filesystem::path& path, std::optional<std::size_t> max_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  ByteSeq out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  if (max_bytes && out.size() > *max_bytes) out.resize(*max_bytes);
  return out;
}

OriginStream make_stream(const std::filesystem::path& path, ByteSeq bytes, Modality m) {
  if (bytes.empty()) throw EmptyStream("no bytes in " + path.string());
  return {path.filename().string(), std::move(bytes), m};
}

std::uint32_t le32(const ByteSeq& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (std::uint32_t{b[at + 3]} << 24);
}
std::uint16_t le16(const ByteSeq& b, std::size_t at) { return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8)); }

void put32(ByteSeq& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(ByteSeq& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(ByteSeq& b, std::string_view tag) { b.insert(b.end(), tag.begin(), tag.end()); }

}  // namespace

std::string_view to_string(Modality m) {
  for (const auto& [k, name] : kModalityNames)
    if (k == m) return name;
  return "raw";
}

Modality modality_from_string(std::string_view name) {
  for (const auto& [k, n] : kModalityNames)
    if (n == name) return k;
  throw std::invalid_argument("unknown modality: " + std::string(name));
}

OriginStream load_text(const std::filesystem::path& path, std::optional<std::size_t> max_bytes) {
  return make_stream(path, read_bytes(path, max_bytes), Modality::Text);
}

OriginStream load_raw(const std::filesystem::path& path, std::optional<std::size_t> max_bytes) {
  return make_stream(path, read_bytes(path, max_bytes), Modality::Raw);
}

OriginStream parse_fasta(std::string_view text, std::string id, FastaStats* stats) {
  std::array<int, 256> code;
  code.fill(-1);
  for (int i = 0; i < 8; ++i) code[static_cast<unsigned char>(kFastaAlphabet[i])] = i;

  OriginStream s{std::move(id), {}, Modality::Dna};
  std::size_t skipped = 0;
  bool header = false;
  bool line_start = true;
  for (char ch : text) {
    if (line_start && ch == '>') header = true;
    if (ch == '\n') {
      header = false;
      line_start = true;
      continue;
    }
    line_start = false;
    if (header || ch == '\r') continue;
    int c = code[static_cast<unsigned char>(ch)];
    if (c < 0) {
      ++skipped;
      continue;
    }
    s.bytes.push_back(static_cast<std::uint8_t>(c));
  }
  if (stats) stats->skipped = skipped;
  if (s.bytes.empty()) throw EmptyStream("FASTA record has no sequence: " + s.id);
  return s;
}

OriginStream load_fasta(const std::filesystem::path& path, FastaStats* stats) {
  ByteSeq raw = read_bytes(path, {});
  return parse_fasta(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()),
                     path.filename().string(), stats);
}

std::string fasta_decode(const ByteSeq& codes) {
  std::string out;
  out.reserve(codes.size());
  for (auto c : codes) {
    if (c > 7) throw std::invalid_argument("not a DNA code: " + std::to_string(c));
    out.push_back(kFastaAlphabet[c]);
  }
  return out;
}

PcmAudio parse_wav(const ByteSeq& f) {
  if (f.size() < 12 || std::string_view(reinterpret_cast<const char*>(f.data()), 4) != "RIFF" ||
      std::string_view(reinterpret_cast<const char*>(f.data() + 8), 4) != "WAVE")
    throw UnsupportedCodec("not a RIFF/WAVE file");

  PcmAudio a;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= f.size()) {
    std::string_view tag(reinterpret_cast<const char*>(f.data() + pos), 4);
    std::size_t len = le32(f, pos + 4);
    std::size_t body = pos + 8;
    if (body + len > f.size()) len = f.size() - body;  // tolerate a short final chunk
    if (tag == "fmt ") {
      if (len < 16) throw UnsupportedCodec("short fmt chunk");
      std::uint16_t format = le16(f, body);
      a.channels = le16(f, body + 2);
      a.sample_rate = le32(f, body + 4);
      a.bits_per_sample = le16(f, body + 14);
      if (format == 0xFFFE && len >= 26) format = le16(f, body + 24);
      if (format != 1) throw UnsupportedCodec("WAV format tag " + std::to_string(format) + " is not PCM");
      if (a.bits_per_sample != 8 && a.bits_per_sample != 16)
        throw UnsupportedCodec(std::to_string(a.bits_per_sample) + "-bit PCM");
      if (a.channels == 0) throw UnsupportedCodec("zero channels");
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw UnsupportedCodec("data before fmt");
      const std::size_t width = a.bits_per_sample / 8;
      const std::size_t frame = width * a.channels;
      const std::size_t frames = len / frame;
      a.samples.reserve(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        std::size_t at = body + i * frame;
        if (width == 2)
          a.samples.push_back(static_cast<std::int16_t>(le16(f, at)));
        else
          a.samples.push_back(static_cast<std::int16_t>((f[at] - 128) * 256));
      }
      return a;
    }
    pos = body + len + (len & 1);
  }
  throw UnsupportedCodec("no data chunk");
}

ByteSeq write_wav(const std::vector<std::int16_t>& samples, std::uint32_t sample_rate) {
  const auto data_len = static_cast<std::uint32_t>(samples.size() * 2);
  ByteSeq b;
  b.reserve(44 + data_len);
  put_tag(b, "RIFF");
  put32(b, 36 + data_len);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, sample_rate);
  put32(b, sample_rate * 2);
  put16(b, 2);
  put16(b, 16);
  put_tag(b, "data");
  put32(b, data_len);
  for (auto s : samples) put16(b, static_cast<std::uint16_t>(s));
  return b;
}

ByteSeq pcm_to_bytes(const std::vector<std::int16_t>& samples, int depth) {
  ByteSeq out;
  if (depth == 16) {
    out.reserve(samples.size() * 2);
    for (auto s : samples) put16(out, static_cast<std::uint16_t>(s));
  } else if (depth == 8) {
    out.reserve(samples.size());
    for (auto s : samples) out.push_back(static_cast<std::uint8_t>(((s >> 8) + 128) & 0xFF));
  } else {
    throw std::invalid_argument("audio depth must be 8 or 16");
  }
  return out;
}

std::vector<std::int16_t> bytes_to_pcm16(const ByteSeq& bytes) {
  if (bytes.size() % 2) throw std::invalid_argument("odd byte count for 16-bit PCM");
  std::vector<std::int16_t> out(bytes.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::int16_t>(le16(bytes, 2 * i));
  return out;
}

OriginStream load_wav_pcm(const std::filesystem::path& path, int depth) {
  if (depth != 8 && depth != 16) throw std::invalid_argument("audio depth must be 8 or 16");
  PcmAudio a = parse_wav(read_bytes(path, {}));
  return make_stream(path, pcm_to_bytes(a.samples, depth), depth == 16 ? Modality::Audio16 : Modality::Audio8);
}

std::vector<Chunk> chunk_streams(const std::vector<OriginStream>& streams, std::size_t window,
                                 std::optional<std::size_t> budget) {
  if (window == 0) throw std::invalid_argument("window must be >= 1");
  std::vector<Chunk> out;
  std::size_t left = budget.value_or(SIZE_MAX);
  for (const auto& s : streams) {
    for (std::size_t off = 0; off < s.bytes.size() && left > 0;) {
      std::size_t n = std::min({window, s.bytes.size() - off, left});
      out.push_back({s.id, off, ByteSeq(s.bytes.begin() + off, s.bytes.begin() + off + n), s.modality});
      off += n;
      left -= n;
    }
    if (left == 0) break;
  }
  return out;
}

std::string base64_encode(const ByteSeq& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

ByteSeq base64_decode(std::string_view text) {
  if (text.size() % 4) throw std::invalid_argument("base64 length not a multiple of 4");
  ByteSeq out(3 * text.size() / 4);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string chunks_to_jsonl(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    nlohmann::json j{{"origin", c.origin},
                     {"offset", c.offset},
                     {"bytes", base64_encode(c.data)},
                     {"modality", to_string(c.modality)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Chunk> chunks_from_jsonl(std::string_view text) {
  std::vector<Chunk> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line);
    Chunk c;
    c.origin = j.at("origin").get<std::string>();
    c.offset = j.at("offset").get<std::uint64_t>();
    c.data = base64_decode(j.at("bytes").get<std::string>());
    c.modality = modality_from_string(j.value("modality", std::string("raw")));
    out.push_back(std::move(c));
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kt
