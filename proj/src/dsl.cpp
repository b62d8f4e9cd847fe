#include "kt/dsl.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace kt {

namespace {

constexpr std::array<OpInfo, kNumOps> kOps = {{
    {Op::SetList, "set_list", "set_list", OpClass::Initiator, 0, 0, true},
    {Op::RangeUp, "range_up", "range_func_up", OpClass::Initiator, 0, 2, false},
    {Op::RangeUpStep, "range_up_step", "range_func_up_step", OpClass::Initiator, 0, 3, false},
    {Op::RepeatNum, "repeat_num", "repeat_num", OpClass::Initiator, 0, 2, false},
    {Op::Substitute, "substitute", "substitute", OpClass::Modifier, 1, 2, false},
    {Op::ReverseList, "reverse_list", "reverse_list", OpClass::Modifier, 1, 0, false},
    {Op::Subseq, "subseq", "subseq", OpClass::Modifier, 1, 2, false},
    {Op::SubseqStep, "subseq_step", "subseq_step", OpClass::Modifier, 1, 3, false},
    {Op::RepeatList, "repeat_list", "repeat_list", OpClass::Modifier, 1, 1, false},
    {Op::MaxN, "max_n", "max_n", OpClass::Modifier, 1, 1, false},
    {Op::MinN, "min_n", "min_n", OpClass::Modifier, 1, 1, false},
    {Op::AddConst, "add_const", "add_const", OpClass::Modifier, 1, 1, false},
    {Op::SubConst, "sub_const", "sub_const", OpClass::Modifier, 1, 1, false},
    {Op::ModConst, "mod_const", "mod_const", OpClass::Modifier, 1, 1, false},
    {Op::ScanAdd, "scan_add", "scan_add", OpClass::Modifier, 1, 0, false},
    {Op::FilterEven, "filter_even", "filter_even", OpClass::Filter, 1, 0, false},
    {Op::FilterOdd, "filter_odd", "filter_odd", OpClass::Filter, 1, 0, false},
    {Op::FilterNonzero, "filter_nonzero", "filter_nonzero", OpClass::Filter, 1, 0, false},
    {Op::AddLists, "add_lists", "add_lists", OpClass::Merger, 2, 0, false},
    {Op::SubLists, "sub_lists", "sub_lists", OpClass::Merger, 2, 0, false},
    {Op::ModLists, "mod_lists", "mod_lists", OpClass::Merger, 2, 0, false},
    {Op::Concatenate, "concatenate", "concatenate", OpClass::Merger, 2, 0, false},
    {Op::Interleave, "interleave", "interleave", OpClass::Merger, 2, 0, false},
}};

Line make(Op op, std::vector<std::size_t> refs, std::vector<std::int64_t> ints) {
  Line l;
  l.op = op;
  l.refs = std::move(refs);
  l.ints = std::move(ints);
  return l;
}

}  // namespace

const OpInfo& op_info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& info : kOps) {
    if (info.name == name || info.alias == name) return info.op;
  }
  return std::nullopt;
}

namespace ops {
Line set_list(ByteSeq values) {
  Line l;
  l.op = Op::SetList;
  l.list = std::move(values);
  return l;
}
Line range_up(std::int64_t start, std::int64_t end) { return make(Op::RangeUp, {}, {start, end}); }
Line range_up_step(std::int64_t start, std::int64_t end, std::int64_t step) {
  return make(Op::RangeUpStep, {}, {start, end, step});
}
Line repeat_num(std::int64_t count, std::int64_t value) { return make(Op::RepeatNum, {}, {count, value}); }
Line substitute(std::size_t src, std::int64_t old_value, std::int64_t new_value) {
  return make(Op::Substitute, {src}, {old_value, new_value});
}
Line reverse_list(std::size_t src) { return make(Op::ReverseList, {src}, {}); }
Line subseq(std::size_t src, std::int64_t start, std::int64_t end) { return make(Op::Subseq, {src}, {start, end}); }
Line subseq_step(std::size_t src, std::int64_t start, std::int64_t end, std::int64_t step) {
  return make(Op::SubseqStep, {src}, {start, end, step});
}
Line repeat_list(std::size_t src, std::int64_t times) { return make(Op::RepeatList, {src}, {times}); }
Line max_n(std::size_t src, std::int64_t n) { return make(Op::MaxN, {src}, {n}); }
Line min_n(std::size_t src, std::int64_t n) { return make(Op::MinN, {src}, {n}); }
Line add_const(std::size_t src, std::int64_t c) { return make(Op::AddConst, {src}, {c}); }
Line sub_const(std::size_t src, std::int64_t c) { return make(Op::SubConst, {src}, {c}); }
Line mod_const(std::size_t src, std::int64_t c) { return make(Op::ModConst, {src}, {c}); }
Line scan_add(std::size_t src) { return make(Op::ScanAdd, {src}, {}); }
Line filter_even(std::size_t src) { return make(Op::FilterEven, {src}, {}); }
Line filter_odd(std::size_t src) { return make(Op::FilterOdd, {src}, {}); }
Line filter_nonzero(std::size_t src) { return make(Op::FilterNonzero, {src}, {}); }
Line add_lists(std::size_t a, std::size_t b) { return make(Op::AddLists, {a, b}, {}); }
Line sub_lists(std::size_t a, std::size_t b) { return make(Op::SubLists, {a, b}, {}); }
Line mod_lists(std::size_t a, std::size_t b) { return make(Op::ModLists, {a, b}, {}); }
Line concatenate(std::size_t a, std::size_t b) { return make(Op::Concatenate, {a, b}, {}); }
Line interleave(std::size_t a, std::size_t b) { return make(Op::Interleave, {a, b}, {}); }
}  // namespace ops

// ---------------------------------------------------------------------------
// Parsing

ParseError::ParseError(std::size_t line, const std::string& reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

struct Arg {
  enum class Kind { Int, Ident, List } kind;
  std::int64_t value = 0;
  std::string ident;
  std::vector<std::int64_t> list;
};

class ArgLexer {
 public:
  ArgLexer(std::string_view text, std::size_t line_no) : s_(text), line_no_(line_no) {}

  std::vector<Arg> parse_all() {
    std::vector<Arg> out;
    skip_ws();
    if (pos_ == s_.size()) return out;
    while (true) {
      out.push_back(parse_arg());
      skip_ws();
      if (pos_ == s_.size()) break;
      expect(',');
    }
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) {
      throw ParseError(line_no_, std::string("expected '") + c + "' in argument list");
    }
    ++pos_;
  }
  std::int64_t parse_int() {
    skip_ws();
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) throw ParseError(line_no_, "malformed integer argument");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }
  Arg parse_arg() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError(line_no_, "missing argument");
    char c = s_[pos_];
    Arg a;
    if (c == '[') {
      ++pos_;
      a.kind = Arg::Kind::List;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return a;
      }
      while (true) {
        a.list.push_back(parse_int());
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          break;
        }
        expect(',');
      }
      return a;
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      a.kind = Arg::Kind::Int;
      a.value = parse_int();
      return a;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    a.kind = Arg::Kind::Ident;
    a.ident = std::string(s_.substr(start, pos_ - start));
    if (!is_identifier(a.ident)) throw ParseError(line_no_, "unexpected character in argument list");
    return a;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_no_;
};

}  // namespace

Program parse_program(std::string_view text) {
  Program prog;
  std::unordered_map<std::string, std::size_t> names;
  bool have_output = false;
  std::size_t line_no = 0;

  auto resolve = [&](const std::string& name, std::size_t at) {
    auto it = names.find(name);
    if (it == names.end()) throw ParseError(at, "bad reference to undefined sequence '" + name + "'");
    return it->second;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view stmt = trim(raw);
    if (stmt.empty()) continue;
    if (have_output) throw ParseError(line_no, "statement after output assignment");

    auto eq = stmt.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected assignment");
    std::string lhs(trim(stmt.substr(0, eq)));
    std::string_view rhs = trim(stmt.substr(eq + 1));
    if (!is_identifier(lhs)) throw ParseError(line_no, "invalid sequence name '" + lhs + "'");

    if (lhs == "output") {
      if (!is_identifier(rhs)) throw ParseError(line_no, "output must name a defined sequence");
      prog.output_ref = resolve(std::string(rhs), line_no);
      have_output = true;
      continue;
    }
    if (names.count(lhs) != 0) throw ParseError(line_no, "duplicate sequence name '" + lhs + "'");

    auto open = rhs.find('(');
    if (open == std::string_view::npos || rhs.back() != ')') throw ParseError(line_no, "expected function call");
    std::string fname(trim(rhs.substr(0, open)));
    auto op = op_from_name(fname);
    if (!op) throw ParseError(line_no, "unknown function '" + fname + "'");
    const OpInfo& info = op_info(*op);

    auto args = ArgLexer(rhs.substr(open + 1, rhs.size() - open - 2), line_no).parse_all();
    const std::size_t expected = static_cast<std::size_t>(info.num_refs + info.num_ints) + (info.takes_list ? 1 : 0);
    if (args.size() != expected) {
      throw ParseError(line_no, fname + " takes " + std::to_string(expected) + " arguments, got " +
                                    std::to_string(args.size()));
    }

    Line l;
    l.op = *op;
    std::size_t k = 0;
    for (int r = 0; r < info.num_refs; ++r, ++k) {
      if (args[k].kind != Arg::Kind::Ident) throw ParseError(line_no, fname + " expects a sequence reference");
      l.refs.push_back(resolve(args[k].ident, line_no));
    }
    if (info.takes_list) {
      if (args[k].kind != Arg::Kind::List) throw ParseError(line_no, fname + " expects a list literal");
      for (auto v : args[k].list) {
        if (v < 0 || v > 255) throw ParseError(line_no, "list element out of byte range");
        l.list.push_back(static_cast<std::uint8_t>(v));
      }
      ++k;
    }
    for (int i = 0; i < info.num_ints; ++i, ++k) {
      if (args[k].kind != Arg::Kind::Int) throw ParseError(line_no, fname + " expects an integer argument");
      l.ints.push_back(args[k].value);
    }

    names.emplace(lhs, prog.lines.size());
    prog.lines.push_back(std::move(l));
  }

  if (!have_output) throw ParseError(line_no, "missing output assignment");
  return prog;
}

// ---------------------------------------------------------------------------
// Rendering

std::string format_seq(const ByteSeq& seq) {
  std::string out = "[";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(seq[i]);
  }
  out += ']';
  return out;
}

std::string line_name(std::size_t index) { return "sequence_" + std::to_string(index + 1); }

std::string render_line(const Line& line, std::size_t index, NameStyle style) {
  const OpInfo& info = op_info(line.op);
  std::string out = line_name(index) + " = ";
  out += style == NameStyle::Alias ? info.alias : info.name;
  out += '(';
  bool first = true;
  auto sep = [&] {
    if (!first) out += ", ";
    first = false;
  };
  for (auto r : line.refs) {
    sep();
    out += line_name(r);
  }
  if (info.takes_list) {
    sep();
    out += format_seq(line.list);
  }
  for (auto v : line.ints) {
    sep();
    out += std::to_string(v);
  }
  out += ')';
  return out;
}

std::string render_program(const Program& p, NameStyle style) {
  std::string out;
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    out += render_line(p.lines[i], i, style);
    out += '\n';
  }
  out += "output = " + line_name(p.output_ref);
  return out;
}

// ---------------------------------------------------------------------------
// Execution

std::string_view to_string(ExecErrorKind kind) {
  switch (kind) {
    case ExecErrorKind::OutOfRange: return "out-of-range";
    case ExecErrorKind::EmptyOperand: return "empty-operand";
    case ExecErrorKind::LengthMismatch: return "length-mismatch";
    case ExecErrorKind::IndexOutOfBounds: return "index-out-of-bounds";
    case ExecErrorKind::StepBudgetExceeded: return "step-budget-exceeded";
    case ExecErrorKind::UnknownFunction: return "unknown-function";
    case ExecErrorKind::BadReference: return "bad-reference";
  }
  return "unknown";
}

const ByteSeq& ExecResult::value() const {
  if (!ok()) throw std::logic_error("ExecResult holds an error");
  return std::get<ByteSeq>(v_);
}

const ExecError& ExecResult::error() const {
  if (ok()) throw std::logic_error("ExecResult holds a value");
  return std::get<ExecError>(v_);
}

namespace {

bool is_byte(std::int64_t v) { return v >= 0 && v <= 255; }

}  // namespace

ExecResult evaluate_line(const Line& line, std::size_t index, const std::vector<ByteSeq>& env,
                         std::uint64_t& steps, std::uint64_t budget) {
  const OpInfo& info = op_info(line.op);
  auto fail = [index](ExecErrorKind k) { return ExecResult(ExecError{k, index}); };

  if (static_cast<std::size_t>(line.op) >= kNumOps || line.refs.size() != static_cast<std::size_t>(info.num_refs) ||
      line.ints.size() != static_cast<std::size_t>(info.num_ints) || (!info.takes_list && !line.list.empty())) {
    return fail(ExecErrorKind::UnknownFunction);
  }
  for (auto r : line.refs) {
    if (r >= index || r >= env.size()) return fail(ExecErrorKind::BadReference);
  }

  // Charges `n` steps; false once the budget is exhausted.
  auto charge = [&](std::uint64_t n) {
    if (n > budget || steps > budget - n) {
      steps = budget;
      return false;
    }
    steps += n;
    return true;
  };

  const ByteSeq* a = info.num_refs > 0 ? &env[line.refs[0]] : nullptr;
  const ByteSeq* b = info.num_refs > 1 ? &env[line.refs[1]] : nullptr;
  const auto& v = line.ints;
  std::uint64_t input_size = (a ? a->size() : 0) + (b ? b->size() : 0);
  if (!charge(input_size + 1)) return fail(ExecErrorKind::StepBudgetExceeded);

  ByteSeq out;
  switch (line.op) {
    case Op::SetList:
      if (!charge(line.list.size())) return fail(ExecErrorKind::StepBudgetExceeded);
      out = line.list;
      break;

    case Op::RangeUp:
    case Op::RangeUpStep: {
      std::int64_t step = line.op == Op::RangeUpStep ? v[2] : 1;
      if (!is_byte(v[0]) || !is_byte(v[1]) || v[0] > v[1] || step < 1) return fail(ExecErrorKind::OutOfRange);
      if (!charge(static_cast<std::uint64_t>((v[1] - v[0]) / step + 1))) return fail(ExecErrorKind::StepBudgetExceeded);
      for (std::int64_t x = v[0]; x <= v[1]; x += step) out.push_back(static_cast<std::uint8_t>(x));
      break;
    }

    case Op::RepeatNum:
      if (v[0] < 0 || !is_byte(v[1])) return fail(ExecErrorKind::OutOfRange);
      if (!charge(static_cast<std::uint64_t>(v[0]))) return fail(ExecErrorKind::StepBudgetExceeded);
      out.assign(static_cast<std::size_t>(v[0]), static_cast<std::uint8_t>(v[1]));
      break;

    case Op::Substitute:
      if (!is_byte(v[0]) || !is_byte(v[1])) return fail(ExecErrorKind::OutOfRange);
      out = *a;
      std::replace(out.begin(), out.end(), static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]));
      break;

    case Op::ReverseList:
      out.assign(a->rbegin(), a->rend());
      break;

    case Op::Subseq:
    case Op::SubseqStep: {
      std::int64_t step = line.op == Op::SubseqStep ? v[2] : 1;
      if (step < 1) return fail(ExecErrorKind::OutOfRange);
      if (a->empty()) return fail(ExecErrorKind::EmptyOperand);
      auto len = static_cast<std::int64_t>(a->size());
      if (v[0] < 0 || v[0] > v[1] || v[1] > len) return fail(ExecErrorKind::IndexOutOfBounds);
      for (std::int64_t i = v[0]; i < v[1]; i += step) out.push_back((*a)[static_cast<std::size_t>(i)]);
      break;
    }

    case Op::RepeatList: {
      if (v[0] < 1) return fail(ExecErrorKind::OutOfRange);
      auto times = static_cast<std::uint64_t>(v[0]);
      if (!a->empty() && times > budget / a->size()) return fail(ExecErrorKind::StepBudgetExceeded);
      if (!charge(times * a->size())) return fail(ExecErrorKind::StepBudgetExceeded);
      out.reserve(times * a->size());
      for (std::uint64_t t = 0; t < times; ++t) out.insert(out.end(), a->begin(), a->end());
      break;
    }

    case Op::MaxN:
    case Op::MinN: {
      if (a->empty()) return fail(ExecErrorKind::EmptyOperand);
      if (v[0] < 1 || v[0] > static_cast<std::int64_t>(a->size())) return fail(ExecErrorKind::IndexOutOfBounds);
      out = *a;
      auto n = static_cast<std::size_t>(v[0]);
      if (line.op == Op::MaxN) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), out.end(), std::greater<>());
      } else {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), out.end());
      }
      out.resize(n);
      break;
    }

    case Op::AddConst:
    case Op::SubConst:
    case Op::ModConst: {
      if (!is_byte(v[0])) return fail(ExecErrorKind::OutOfRange);
      if (line.op == Op::ModConst && v[0] < 1) return fail(ExecErrorKind::OutOfRange);
      out.reserve(a->size());
      for (auto x : *a) {
        std::int64_t r = line.op == Op::AddConst ? x + v[0] : line.op == Op::SubConst ? x - v[0] : x % v[0];
        if (!is_byte(r)) return fail(ExecErrorKind::OutOfRange);
        out.push_back(static_cast<std::uint8_t>(r));
      }
      break;
    }

    case Op::ScanAdd: {
      std::int64_t acc = 0;
      out.reserve(a->size());
      for (auto x : *a) {
        acc += x;
        if (acc > 255) return fail(ExecErrorKind::OutOfRange);
        out.push_back(static_cast<std::uint8_t>(acc));
      }
      break;
    }

    case Op::FilterEven:
      std::copy_if(a->begin(), a->end(), std::back_inserter(out), [](std::uint8_t x) { return x % 2 == 0; });
      break;
    case Op::FilterOdd:
      std::copy_if(a->begin(), a->end(), std::back_inserter(out), [](std::uint8_t x) { return x % 2 == 1; });
      break;
    case Op::FilterNonzero:
      std::copy_if(a->begin(), a->end(), std::back_inserter(out), [](std::uint8_t x) { return x != 0; });
      break;

    case Op::AddLists:
    case Op::SubLists:
    case Op::ModLists: {
      if (a->size() != b->size()) return fail(ExecErrorKind::LengthMismatch);
      out.reserve(a->size());
      for (std::size_t i = 0; i < a->size(); ++i) {
        std::int64_t x = (*a)[i], y = (*b)[i], r = 0;
        if (line.op == Op::AddLists) {
          r = x + y;
        } else if (line.op == Op::SubLists) {
          r = x - y;
        } else {
          if (y < 1) return fail(ExecErrorKind::OutOfRange);
          r = x % y;
        }
        if (!is_byte(r)) return fail(ExecErrorKind::OutOfRange);
        out.push_back(static_cast<std::uint8_t>(r));
      }
      break;
    }

    case Op::Concatenate:
      out.reserve(a->size() + b->size());
      out.insert(out.end(), a->begin(), a->end());
      out.insert(out.end(), b->begin(), b->end());
      break;

    case Op::Interleave: {
      out.reserve(a->size() + b->size());
      std::size_t n = std::max(a->size(), b->size());
      for (std::size_t i = 0; i < n; ++i) {
        if (i < a->size()) out.push_back((*a)[i]);
        if (i < b->size()) out.push_back((*b)[i]);
      }
      break;
    }
  }
  return out;
}

std::vector<TraceEntry> execute_with_feedback(const Program& p, std::uint64_t budget) {
  std::vector<TraceEntry> trace;
  std::vector<ByteSeq> env;
  env.reserve(p.lines.size());
  std::uint64_t steps = 0;
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    ExecResult r = evaluate_line(p.lines[i], i, env, steps, budget);
    if (!r.ok()) {
      trace.push_back({i, std::move(r)});
      return trace;
    }
    env.push_back(r.value());
    trace.push_back({i, std::move(r)});
  }
  return trace;
}

ExecResult execute_program(const Program& p, std::uint64_t budget) {
  if (p.lines.empty()) return ExecError{ExecErrorKind::BadReference, 0};
  if (p.output_ref >= p.lines.size()) return ExecError{ExecErrorKind::BadReference, p.lines.size()};
  std::vector<ByteSeq> env;
  env.reserve(p.lines.size());
  std::uint64_t steps = 0;
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    ExecResult r = evaluate_line(p.lines[i], i, env, steps, budget);
    if (!r.ok()) return r;
    env.push_back(r.value());
  }
  return std::move(env[p.output_ref]);
}

}  // namespace kt
