#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kt/codec/bitstream.hpp"

namespace kt {

/// Sequential next-symbol predictor over 256 byte values plus an end marker.
/// Implementations return integer frequencies (all >= 1) so encoder and
/// decoder see bit-identical distributions.
class ProbabilityModel {
 public:
  static constexpr std::size_t kAlphabet = 257;
  static constexpr std::uint16_t kEndSymbol = 256;

  virtual ~ProbabilityModel() = default;

  virtual void reset() = 0;
  /// Fills `freq` (size kAlphabet) for the next position.
  virtual void frequencies(std::vector<std::uint32_t>& freq) = 0;
  virtual void update(std::uint16_t symbol) = 0;
  /// Identifies the model configuration; stored in stream headers.
  virtual std::uint32_t checksum() const = 0;
  virtual std::string describe() const = 0;

  /// Normalized distribution for the next position.
  std::vector<double> probabilities();
};

/// Adaptive order-k byte context model with add-one smoothing, k in {0, 1, 2}.
class AdaptiveContextModel final : public ProbabilityModel {
 public:
  explicit AdaptiveContextModel(int order);

  void reset() override;
  void frequencies(std::vector<std::uint32_t>& freq) override;
  void update(std::uint16_t symbol) override;
  std::uint32_t checksum() const override;
  std::string describe() const override;

  int order() const { return order_; }

 private:
  std::vector<std::uint32_t>& table();

  int order_;
  std::uint32_t context_ = 0;
  std::size_t seen_ = 0;
  std::vector<std::vector<std::uint32_t>> counts_;
};

/// Per-position distributions imported from an external language model.
/// File format: JSON lines `{"position": i, "distribution": [p0, ..., p255(, p_end)]}`
/// or `{"position": i, "logprob": l}` (natural log of the realized symbol).
/// Only full distributions can drive a decodable stream.
class ExternalDistributionModel final : public ProbabilityModel {
 public:
  static ExternalDistributionModel load(const std::filesystem::path& path);
  static ExternalDistributionModel from_text(const std::string& jsonl);

  void reset() override { position_ = 0; }
  void frequencies(std::vector<std::uint32_t>& freq) override;
  void update(std::uint16_t) override { ++position_; }
  std::uint32_t checksum() const override { return checksum_; }
  std::string describe() const override;

  bool has_distributions() const { return !rows_.empty(); }
  /// Sum of -log2 p over imported realized-symbol log-probs, in bits.
  double logprob_cost_bits() const { return logprob_bits_; }

 private:
  std::vector<std::vector<std::uint32_t>> rows_;
  double logprob_bits_ = 0.0;
  std::size_t position_ = 0;
  std::uint32_t checksum_ = 0;
};

struct LmStream {
  std::uint32_t model_checksum = 0;
  std::uint64_t symbols = 0;  // byte count, for reporting only
  Bitstream payload;
};

/// Codes every byte followed by the end marker. Resets `model` first.
LmStream lm_compress(std::span<const std::uint8_t> data, ProbabilityModel& model);
/// Throws ModelMismatch if `model` is not the one used for encoding.
std::vector<std::uint8_t> lm_decompress(const LmStream& stream, ProbabilityModel& model);

/// -sum log2 p(x_i | x_<i) under the model's integer frequencies, end marker included.
double model_cost_bits(std::span<const std::uint8_t> data, ProbabilityModel& model);

/// File framing: "KTLM", version byte, checksum, symbol count, bit length, payload.
std::vector<std::uint8_t> serialize(const LmStream& stream);
LmStream deserialize_lm_stream(std::span<const std::uint8_t> bytes);

}  // namespace kt
