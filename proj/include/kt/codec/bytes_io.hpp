#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace kt::io {

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

/// Big-endian cursor over a byte buffer; throws on reads past the end.
class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t get_be(int bytes) {
    if (remaining() < static_cast<std::size_t>(bytes)) throw std::out_of_range("read past end of buffer");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (remaining() < n) throw std::out_of_range("read past end of buffer");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace kt::io
