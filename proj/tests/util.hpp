#pragma once

#include <vector>

#include "kt/dsl.hpp"

inline kt::ByteSeq bytes(const std::vector<int>& v) { return kt::ByteSeq(v.begin(), v.end()); }

inline kt::ByteSeq iota_bytes(int lo, int hi) {
  kt::ByteSeq s;
  for (int x = lo; x <= hi; ++x) s.push_back(static_cast<std::uint8_t>(x));
  return s;
}
