#pragma once

#include <cstdint>
#include <vector>

namespace kt {

/// Bits packed MSB-first into bytes; `bit_length` counts the valid bits.
struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;

  bool operator==(const Bitstream&) const = default;
};

class BitWriter {
 public:
  void put(bool bit);
  void put_bits(std::uint64_t value, int count);
  std::uint64_t size() const { return out_.bit_length; }
  Bitstream finish() &&;

 private:
  Bitstream out_;
};

/// Reads bits in order; past the end it yields zeros and counts the overrun.
class BitReader {
 public:
  explicit BitReader(const Bitstream& in, std::uint64_t start_bit = 0) : in_(in), pos_(start_bit) {}
  bool get();
  std::uint64_t get_bits(int count);
  std::uint64_t position() const { return pos_; }
  std::uint64_t overrun() const { return pos_ > in_.bit_length ? pos_ - in_.bit_length : 0; }

 private:
  const Bitstream& in_;
  std::uint64_t pos_;
};

}  // namespace kt
