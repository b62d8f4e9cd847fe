#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kt {

/// Byte values are the data being compressed; uint8_t pins every element to [0, 255].
using ByteSeq = std::vector<std::uint8_t>;

enum class Op : std::uint8_t {
  // initiators
  SetList,
  RangeUp,
  RangeUpStep,
  RepeatNum,
  // modifiers
  Substitute,
  ReverseList,
  Subseq,
  SubseqStep,
  RepeatList,
  MaxN,
  MinN,
  AddConst,
  SubConst,
  ModConst,
  ScanAdd,
  // filters
  FilterEven,
  FilterOdd,
  FilterNonzero,
  // mergers
  AddLists,
  SubLists,
  ModLists,
  Concatenate,
  Interleave,
};

inline constexpr std::size_t kNumOps = 23;

enum class OpClass : std::uint8_t { Initiator, Modifier, Filter, Merger };

/// Static signature of a DSL function: how many line references, how many
/// integer parameters, and whether it takes a literal list.
struct OpInfo {
  Op op;
  std::string_view name;
  std::string_view alias;  // alternate spelling accepted by the parser
  OpClass cls;
  int num_refs;
  int num_ints;
  bool takes_list;
};

const OpInfo& op_info(Op op);
std::optional<Op> op_from_name(std::string_view name);

/// One assignment. `refs` index earlier lines; `ints` are the scalar
/// parameters in surface order; `list` is only used by set_list.
struct Line {
  Op op = Op::SetList;
  std::vector<std::size_t> refs;
  std::vector<std::int64_t> ints;
  ByteSeq list;

  bool operator==(const Line&) const = default;
};

struct Program {
  std::vector<Line> lines;
  std::size_t output_ref = 0;

  bool operator==(const Program&) const = default;
};

// Line builders; arguments follow the surface order of each function.
namespace ops {
Line set_list(ByteSeq values);
Line range_up(std::int64_t start, std::int64_t end);
Line range_up_step(std::int64_t start, std::int64_t end, std::int64_t step);
Line repeat_num(std::int64_t count, std::int64_t value);
Line substitute(std::size_t src, std::int64_t old_value, std::int64_t new_value);
Line reverse_list(std::size_t src);
Line subseq(std::size_t src, std::int64_t start, std::int64_t end);
Line subseq_step(std::size_t src, std::int64_t start, std::int64_t end, std::int64_t step);
Line repeat_list(std::size_t src, std::int64_t times);
Line max_n(std::size_t src, std::int64_t n);
Line min_n(std::size_t src, std::int64_t n);
Line add_const(std::size_t src, std::int64_t c);
Line sub_const(std::size_t src, std::int64_t c);
Line mod_const(std::size_t src, std::int64_t c);
Line scan_add(std::size_t src);
Line filter_even(std::size_t src);
Line filter_odd(std::size_t src);
Line filter_nonzero(std::size_t src);
Line add_lists(std::size_t a, std::size_t b);
Line sub_lists(std::size_t a, std::size_t b);
Line mod_lists(std::size_t a, std::size_t b);
Line concatenate(std::size_t a, std::size_t b);
Line interleave(std::size_t a, std::size_t b);
}  // namespace ops

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

/// Parses `name = func(args)` lines terminated by `output = name`.
/// Trailing `# ...` comments are ignored, so annotated programs parse too.
Program parse_program(std::string_view text);

enum class NameStyle { Canonical, Alias };

/// Lines are named sequence_1..sequence_k; output is `output = sequence_j`.
std::string render_program(const Program& p, NameStyle style = NameStyle::Canonical);
std::string render_line(const Line& line, std::size_t index, NameStyle style = NameStyle::Canonical);
std::string line_name(std::size_t index);

enum class ExecErrorKind : std::uint8_t {
  OutOfRange,
  EmptyOperand,
  LengthMismatch,
  IndexOutOfBounds,
  StepBudgetExceeded,
  UnknownFunction,
  BadReference,
};

std::string_view to_string(ExecErrorKind kind);

struct ExecError {
  ExecErrorKind kind;
  std::size_t line;

  bool operator==(const ExecError&) const = default;
};

/// Either the sequence a program produced or the first error it hit.
class ExecResult {
 public:
  ExecResult(ByteSeq value) : v_(std::move(value)) {}
  ExecResult(ExecError error) : v_(error) {}

  bool ok() const { return std::holds_alternative<ByteSeq>(v_); }
  explicit operator bool() const { return ok(); }
  const ByteSeq& value() const;
  const ExecError& error() const;

 private:
  std::variant<ByteSeq, ExecError> v_;
};

inline constexpr std::uint64_t kDefaultStepBudget = 10'000'000;

/// Pure evaluation of the program; every primitive element read or written
/// costs one step against `budget`.
ExecResult execute_program(const Program& p, std::uint64_t budget = kDefaultStepBudget);

struct TraceEntry {
  std::size_t line;
  ExecResult result;
};

/// Per-line values in program order; stops after the first error.
std::vector<TraceEntry> execute_with_feedback(const Program& p,
                                              std::uint64_t budget = kDefaultStepBudget);

/// Evaluates one line given the values of all earlier lines. `steps` is
/// charged and checked against `budget`.
ExecResult evaluate_line(const Line& line, std::size_t index, const std::vector<ByteSeq>& env,
                         std::uint64_t& steps, std::uint64_t budget);

std::string format_seq(const ByteSeq& seq);

}  // namespace kt
