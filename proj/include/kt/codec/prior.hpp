#pragma once

#include <cstdint>
#include <vector>

#include "kt/codec/arithmetic.hpp"
#include "kt/codec/bitstream.hpp"
#include "kt/dsl.hpp"

namespace kt {

/// Bounds of the uniform prior over DSL programs. Every function choice is
/// one of kNumOps functions plus a stop symbol that also selects the output.
struct PriorCostModel {
  std::uint64_t num_functions = kNumOps;
  std::uint64_t byte_size = 8;
  std::uint64_t max_num_repetitions = 25;
  std::uint64_t max_list_len = 25;
  std::uint64_t max_step = 5;

  /// Alphabet of the function symbol: all functions plus stop.
  std::uint64_t function_symbols() const { return num_functions + 1; }
  double bits_per_func() const;
  std::uint64_t byte_values() const { return std::uint64_t{1} << byte_size; }
};

/// One uniformly coded decision: `value` out of `alphabet` equally likely choices.
struct UniformSymbol {
  std::uint64_t value;
  std::uint64_t alphabet;

  bool operator==(const UniformSymbol&) const = default;
};

/// The decision sequence that identifies `p` under the prior; throws
/// CostError when a parameter is outside the model's bounds.
std::vector<UniformSymbol> program_symbols(const Program& p, const PriorCostModel& m = {});

/// Sum of log2(alphabet) over program_symbols(p, m).
double program_bit_cost(const Program& p, const PriorCostModel& m = {});

/// Arithmetic-codes the program's decision sequence into `enc`.
void encode_program_into(const Program& p, const PriorCostModel& m, ArithmeticEncoder& enc);
/// Reads one program back; throws DecodeError on an impossible decision.
Program decode_program_from(ArithmeticDecoder& dec, const PriorCostModel& m);

Bitstream encode_program(const Program& p, const PriorCostModel& m = {});
Program decode_program(const Bitstream& bits, const PriorCostModel& m = {});

}  // namespace kt
