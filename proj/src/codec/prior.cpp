#include "kt/codec/prior.hpp"

#include <cmath>
#include <string>

#include "kt/codec/errors.hpp"

namespace kt {

double PriorCostModel::bits_per_func() const { return std::log2(static_cast<double>(function_symbols())); }

namespace {

// Walks the decisions of one line's parameters. `field(value, alphabet)`
// either records `value` (encoding) or overwrites it (decoding); the line
// must already carry the op and correctly sized refs/ints. Bounds are only
// checked when encoding, since decoded values are in range by construction.
template <class Field>
void visit_params(Line& line, std::size_t line_index, const PriorCostModel& m, bool check, Field&& field) {
  auto bounded = [&](std::int64_t& x, std::int64_t lo, std::uint64_t n, const char* what) {
    if (check && (x < lo || static_cast<std::uint64_t>(x - lo) >= n)) {
      throw CostError(std::string(what) + " " + std::to_string(x) + " outside prior bounds on line " +
                      std::to_string(line_index + 1));
    }
    auto v = check ? static_cast<std::uint64_t>(x - lo) : 0;
    field(v, n);
    x = static_cast<std::int64_t>(v) + lo;
  };
  auto byte = [&](std::int64_t& x) { bounded(x, 0, m.byte_values(), "byte parameter"); };
  auto ref = [&](std::size_t& r) {
    if (line_index == 0 || r >= line_index) {
      throw CostError("reference outside earlier lines on line " + std::to_string(line_index + 1));
    }
    std::uint64_t v = r;
    field(v, line_index);
    r = static_cast<std::size_t>(v);
  };

  for (auto& r : line.refs) ref(r);
  auto& a = line.ints;

  switch (line.op) {
    case Op::SetList: {
      auto len = static_cast<std::int64_t>(line.list.size());
      bounded(len, 1, m.max_list_len, "set_list length");
      line.list.resize(static_cast<std::size_t>(len));
      for (auto& e : line.list) {
        std::uint64_t v = e;
        field(v, m.byte_values());
        e = static_cast<std::uint8_t>(v);
      }
      break;
    }
    case Op::RangeUp:
      byte(a[0]);
      byte(a[1]);
      break;
    case Op::RangeUpStep:
      byte(a[0]);
      byte(a[1]);
      bounded(a[2], 1, m.max_step, "step");
      break;
    case Op::RepeatNum:
      bounded(a[0], 1, m.max_num_repetitions, "repetition count");
      byte(a[1]);
      break;
    case Op::Substitute:
      byte(a[0]);
      byte(a[1]);
      break;
    case Op::Subseq:
    case Op::SubseqStep: {
      // the end index is coded as the span length start+1..start+max_list_len
      std::int64_t span = a[1] - a[0];
      bounded(a[0], 0, m.max_list_len, "subsequence start");
      bounded(span, 1, m.max_list_len, "subsequence span");
      a[1] = a[0] + span;
      if (line.op == Op::SubseqStep) bounded(a[2], 1, m.max_step, "step");
      break;
    }
    case Op::RepeatList:
      bounded(a[0], 1, m.max_num_repetitions, "repetition count");
      break;
    case Op::MaxN:
    case Op::MinN:
      bounded(a[0], 1, m.max_list_len, "item count");
      break;
    case Op::AddConst:
    case Op::SubConst:
    case Op::ModConst:
      byte(a[0]);
      break;
    case Op::ReverseList:
    case Op::ScanAdd:
    case Op::FilterEven:
    case Op::FilterOdd:
    case Op::FilterNonzero:
    case Op::AddLists:
    case Op::SubLists:
    case Op::ModLists:
    case Op::Concatenate:
    case Op::Interleave:
      break;
  }
}

void check_model(const PriorCostModel& m) {
  if (m.num_functions < kNumOps || m.byte_size == 0 || m.byte_size > 16 || m.max_list_len == 0 ||
      m.max_num_repetitions == 0 || m.max_step == 0) {
    throw CostError("prior cost model does not cover the DSL");
  }
}

void check_shape(const Line& line, std::size_t index) {
  const OpInfo& info = op_info(line.op);
  if (line.refs.size() != static_cast<std::size_t>(info.num_refs) ||
      line.ints.size() != static_cast<std::size_t>(info.num_ints) || (!info.takes_list && !line.list.empty())) {
    throw CostError("malformed line " + std::to_string(index + 1));
  }
}

template <class Field>
void visit_program(const Program& p, const PriorCostModel& m, Field&& field) {
  check_model(m);
  if (p.lines.empty()) throw CostError("program has no lines");
  if (p.output_ref >= p.lines.size()) throw CostError("output reference outside program");
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    check_shape(p.lines[i], i);
    std::uint64_t op = static_cast<std::uint64_t>(p.lines[i].op);
    field(op, m.function_symbols());
    Line copy = p.lines[i];
    visit_params(copy, i, m, true, field);
  }
  std::uint64_t stop = m.num_functions;
  field(stop, m.function_symbols());
  std::uint64_t out = p.output_ref;
  field(out, p.lines.size());
}

}  // namespace

std::vector<UniformSymbol> program_symbols(const Program& p, const PriorCostModel& m) {
  std::vector<UniformSymbol> out;
  visit_program(p, m, [&](std::uint64_t& v, std::uint64_t n) { out.push_back({v, n}); });
  return out;
}

double program_bit_cost(const Program& p, const PriorCostModel& m) {
  double bits = 0.0;
  visit_program(p, m, [&](std::uint64_t&, std::uint64_t n) { bits += std::log2(static_cast<double>(n)); });
  return bits;
}

void encode_program_into(const Program& p, const PriorCostModel& m, ArithmeticEncoder& enc) {
  // collect first so a CostError leaves the encoder untouched
  for (const auto& s : program_symbols(p, m)) enc.encode_uniform(s.value, s.alphabet);
}

Program decode_program_from(ArithmeticDecoder& dec, const PriorCostModel& m) {
  check_model(m);
  Program p;
  auto field = [&](std::uint64_t& v, std::uint64_t n) { v = dec.decode_uniform(n); };
  while (true) {
    std::uint64_t sym = dec.decode_uniform(m.function_symbols());
    if (sym == m.num_functions) {
      if (p.lines.empty()) throw DecodeError("stop symbol before any line");
      p.output_ref = static_cast<std::size_t>(dec.decode_uniform(p.lines.size()));
      return p;
    }
    if (sym >= kNumOps) throw DecodeError("function symbol outside the DSL");
    Line line;
    line.op = static_cast<Op>(sym);
    const OpInfo& info = op_info(line.op);
    if (info.num_refs > 0 && p.lines.empty()) throw DecodeError("reference with no earlier line");
    line.refs.assign(static_cast<std::size_t>(info.num_refs), 0);
    line.ints.assign(static_cast<std::size_t>(info.num_ints), 0);
    if (info.takes_list) line.list.assign(1, 0);
    visit_params(line, p.lines.size(), m, false, field);
    p.lines.push_back(std::move(line));
    if (dec.overrun() > static_cast<std::uint64_t>(kCoderBits)) throw DecodeError("program stream truncated");
  }
}

Bitstream encode_program(const Program& p, const PriorCostModel& m) {
  auto symbols = program_symbols(p, m);
  BitWriter w;
  ArithmeticEncoder enc(w);
  for (const auto& s : symbols) enc.encode_uniform(s.value, s.alphabet);
  enc.finish();
  return std::move(w).finish();
}

Program decode_program(const Bitstream& bits, const PriorCostModel& m) {
  if (bits.bit_length == 0) throw DecodeError("empty program stream");
  if (bits.bytes.size() * 8 < bits.bit_length) throw DecodeError("bit length exceeds byte payload");
  BitReader r(bits);
  ArithmeticDecoder dec(r);
  Program p;
  try {
    p = decode_program_from(dec, m);
  } catch (const CostError& e) {
    throw DecodeError(e.what());
  }
  // the encoder is deterministic, so a genuine stream re-encodes to itself
  if (encode_program(p, m) != bits) throw DecodeError("truncated or corrupt program stream");
  return p;
}

}  // namespace kt
