#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kt/dsl.hpp"

namespace kt {

enum class Modality { Text, Dna, Audio16, Audio8, Raw };

std::string_view to_string(Modality m);
/// Throws std::invalid_argument for unknown names.
Modality modality_from_string(std::string_view name);

struct OriginStream {
  std::string id;
  ByteSeq bytes;
  Modality modality = Modality::Raw;
};

struct Chunk {
  std::string origin;
  std::uint64_t offset = 0;
  ByteSeq data;
  Modality modality = Modality::Raw;

  bool operator==(const Chunk&) const = default;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedCodec : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyStream : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw file bytes; `max_bytes` keeps only a prefix.
OriginStream load_text(const std::filesystem::path& path, std::optional<std::size_t> max_bytes = {});
OriginStream load_raw(const std::filesystem::path& path, std::optional<std::size_t> max_bytes = {});

// A C G T a c g t -> 0..7
inline constexpr char kFastaAlphabet[9] = "ACGTacgt";

struct FastaStats {
  std::size_t skipped = 0;  // symbols outside the alphabet, e.g. N
};

OriginStream parse_fasta(std::string_view text, std::string id, FastaStats* stats = nullptr);
OriginStream load_fasta(const std::filesystem::path& path, FastaStats* stats = nullptr);
/// Inverse table: codes 0..7 back to letters.
std::string fasta_decode(const ByteSeq& codes);

/// Decoded PCM samples of the first channel.
struct PcmAudio {
  std::uint32_t sample_rate = 0;
  std::uint16_t channels = 1;
  std::uint16_t bits_per_sample = 16;
  std::vector<std::int16_t> samples;
};

PcmAudio parse_wav(const ByteSeq& file);
/// Mono 16-bit PCM file image.
ByteSeq write_wav(const std::vector<std::int16_t>& samples, std::uint32_t sample_rate = 16000);

/// depth 16: little-endian byte pairs. depth 8: high byte of each sample
/// shifted to unsigned.
ByteSeq pcm_to_bytes(const std::vector<std::int16_t>& samples, int depth);
std::vector<std::int16_t> bytes_to_pcm16(const ByteSeq& bytes);

OriginStream load_wav_pcm(const std::filesystem::path& path, int depth);

/// Tiles every origin into `window`-byte chunks, keeping the last partial
/// one, in stream order. With a budget the total is cut to exactly that
/// many bytes (or everything, if the streams are shorter).
std::vector<Chunk> chunk_streams(const std::vector<OriginStream>& streams, std::size_t window = 128,
                                 std::optional<std::size_t> budget = {});

std::string base64_encode(const ByteSeq& bytes);
ByteSeq base64_decode(std::string_view text);

/// JSON lines `{"origin", "offset", "bytes" (base64), "modality"}`.
std::string chunks_to_jsonl(const std::vector<Chunk>& chunks);
std::vector<Chunk> chunks_from_jsonl(std::string_view text);

void write_file(const std::filesystem::path& path, std::string_view data);
std::string read_file(const std::filesystem::path& path);

}  // namespace kt
