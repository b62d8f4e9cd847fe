#include "kt/codec/arithmetic.hpp"

#include <stdexcept>

#include "kt/codec/errors.hpp"

namespace kt {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kTop = (std::uint64_t{1} << kCoderBits) - 1;
constexpr std::uint64_t kHalf = std::uint64_t{1} << (kCoderBits - 1);
constexpr std::uint64_t kQuarter = std::uint64_t{1} << (kCoderBits - 2);

void narrow(std::uint64_t& low, std::uint64_t& high, std::uint64_t cum_low, std::uint64_t cum_high,
            std::uint64_t total) {
  if (total == 0 || total > kCoderMaxTotal || cum_low >= cum_high || cum_high > total) {
    throw std::invalid_argument("arithmetic coder: invalid symbol interval");
  }
  const u128 range = static_cast<u128>(high - low) + 1;
  high = low + static_cast<std::uint64_t>(range * cum_high / total) - 1;
  low = low + static_cast<std::uint64_t>(range * cum_low / total);
}

}  // namespace

void ArithmeticEncoder::emit(bool bit) {
  out_.put(bit);
  for (; pending_ > 0; --pending_) out_.put(!bit);
}

void ArithmeticEncoder::encode(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total) {
  narrow(low_, high_, cum_low, cum_high, total);
  while (true) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = low_ << 1;
    high_ = (high_ << 1) | 1;
  }
}

void ArithmeticEncoder::encode_uniform(std::uint64_t value, std::uint64_t n) {
  if (value >= n) throw std::invalid_argument("arithmetic coder: uniform value out of range");
  if (n == 1) return;
  encode(value, value + 1, n);
}

void ArithmeticEncoder::finish() {
  ++pending_;
  emit(low_ >= kQuarter);
}

ArithmeticDecoder::ArithmeticDecoder(BitReader& in) : in_(in) {
  value_ = in_.get_bits(kCoderBits);
}

std::uint64_t ArithmeticDecoder::target(std::uint64_t total) const {
  if (value_ < low_ || value_ > high_) return total;
  const u128 range = static_cast<u128>(high_ - low_) + 1;
  const u128 offset = static_cast<u128>(value_ - low_) + 1;
  return static_cast<std::uint64_t>((offset * total - 1) / range);
}

void ArithmeticDecoder::consume(std::uint64_t cum_low, std::uint64_t cum_high, std::uint64_t total) {
  narrow(low_, high_, cum_low, cum_high, total);
  while (true) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = low_ << 1;
    high_ = (high_ << 1) | 1;
    value_ = ((value_ << 1) | (in_.get() ? 1u : 0u)) & kTop;
  }
}

std::uint64_t ArithmeticDecoder::decode_uniform(std::uint64_t n) {
  if (n == 1) return 0;
  std::uint64_t v = target(n);
  if (v >= n) throw DecodeError("arithmetic decoder desynchronized");
  consume(v, v + 1, n);
  return v;
}

}  // namespace kt
