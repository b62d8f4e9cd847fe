#include "kt/codec/bitstream.hpp"

namespace kt {

void BitWriter::put(bool bit) {
  if (out_.bit_length % 8 == 0) out_.bytes.push_back(0);
  if (bit) out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (out_.bit_length % 8));
  ++out_.bit_length;
}

void BitWriter::put_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put(((value >> i) & 1u) != 0);
}

Bitstream BitWriter::finish() && { return std::move(out_); }

bool BitReader::get() {
  bool bit = false;
  if (pos_ < in_.bit_length) bit = ((in_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u) != 0;
  ++pos_;
  return bit;
}

std::uint64_t BitReader::get_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (get() ? 1u : 0u);
  return v;
}

}  // namespace kt
