#pragma once

#include <cstdint>

#include "kt/codec/bitstream.hpp"

namespace kt {

// Binary arithmetic coder with 62-bit registers and carry-free
// underflow handling. Symbol intervals are [cum_low, cum_high) out of
// `total`; totals must stay below 2^60.
inline constexpr int kCoderBits = 62;
inline constexpr std::uint64_t kCoderMaxTotal = std::uint64_t{1} << (kCoderBits - 2);

class ArithmeticEncoder {
 public:
  explicit ArithmeticEncoder(BitWriter& out) : out_(out) {}

  void encode(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total);
  /// `value` in [0, n); n == 1 costs nothing.
  void encode_uniform(std::uint64_t value, std::uint64_t n);
  /// Emits the two disambiguating bits plus any pending underflow bits.
  void finish();

 private:
  void emit(bool bit);

  BitWriter& out_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = (std::uint64_t{1} << kCoderBits) - 1;
  std::uint64_t pending_ = 0;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(BitReader& in);

  /// Cumulative count the next symbol falls at; follow with consume().
  std::uint64_t target(std::uint64_t total) const;
  void consume(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total);
  std::uint64_t decode_uniform(std::uint64_t n);
  /// Bits read past the end of the underlying stream.
  std::uint64_t overrun() const { return in_.overrun(); }

 private:
  BitReader& in_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = (std::uint64_t{1} << kCoderBits) - 1;
  std::uint64_t value_ = 0;
};

}  // namespace kt
