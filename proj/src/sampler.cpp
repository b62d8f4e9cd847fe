#include "kt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>

#include <json.hpp>

#include "kt/codec/errors.hpp"

namespace kt {

// ---------------------------------------------------------------------------
// Config

void SamplerConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be a probability");
  };
  prob(p_nonmath_modifier, "p_nonmath_modifier");
  prob(p_reuse_original, "p_reuse_original");
  prob(p_substitute_exclude_original, "p_substitute_exclude_original");
  prob(p_math_modifier, "p_math_modifier");
  prob(p_math_merger, "p_math_merger");
  prob(p_concatenate, "p_concatenate");
  prob(p_interleave, "p_interleave");
  prob(p_merge_reuse, "p_merge_reuse");
  if (std::abs(p_concatenate + p_interleave - 1.0) > 1e-9) {
    throw std::invalid_argument("p_concatenate + p_interleave must equal 1");
  }
  if (n_initiators_min < 1 || n_initiators_max < n_initiators_min) throw std::invalid_argument("bad initiator range");
  if (fixed_len_min < 1 || fixed_len_max < fixed_len_min) throw std::invalid_argument("bad fixed length range");
  if (fixed_len_max > max_list_len) throw std::invalid_argument("fixed_len_max exceeds max_list_len");
  if (fixed_len_max > max_repetitions) throw std::invalid_argument("fixed_len_max exceeds max_repetitions");
  if (byte_size != 8) throw std::invalid_argument("only 8-bit bytes are supported");
  if (max_repetitions < 2 || max_step < 2 || max_list_len < 1) throw std::invalid_argument("bad parameter bounds");
  if (max_sequence_length < fixed_len_max || max_lines < 2 || max_retries < 1) {
    throw std::invalid_argument("bad sampler limits");
  }
}

PriorCostModel SamplerConfig::prior() const {
  PriorCostModel m;
  m.byte_size = static_cast<std::uint64_t>(byte_size);
  m.max_num_repetitions = static_cast<std::uint64_t>(max_repetitions);
  m.max_list_len = static_cast<std::uint64_t>(max_list_len);
  m.max_step = static_cast<std::uint64_t>(max_step);
  return m;
}

SamplerConfig load_sampler_config(const std::filesystem::path& path, SamplerConfig cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sampler config " + path.string());
  auto j = nlohmann::json::parse(in);
  std::map<std::string, int*> ints = {
      {"n_initiators_min", &cfg.n_initiators_min}, {"n_initiators_max", &cfg.n_initiators_max},
      {"fixed_len_min", &cfg.fixed_len_min},       {"fixed_len_max", &cfg.fixed_len_max},
      {"byte_size", &cfg.byte_size},               {"max_repetitions", &cfg.max_repetitions},
      {"max_list_len", &cfg.max_list_len},         {"max_step", &cfg.max_step},
      {"max_sequence_length", &cfg.max_sequence_length}, {"max_lines", &cfg.max_lines},
      {"max_retries", &cfg.max_retries},
  };
  std::map<std::string, double*> probs = {
      {"p_nonmath_modifier", &cfg.p_nonmath_modifier},
      {"p_reuse_original", &cfg.p_reuse_original},
      {"p_substitute_exclude_original", &cfg.p_substitute_exclude_original},
      {"p_math_modifier", &cfg.p_math_modifier},
      {"p_math_merger", &cfg.p_math_merger},
      {"p_concatenate", &cfg.p_concatenate},
      {"p_interleave", &cfg.p_interleave},
      {"p_merge_reuse", &cfg.p_merge_reuse},
  };
  for (auto& [key, value] : j.items()) {
    if (auto it = ints.find(key); it != ints.end()) {
      *it->second = value.get<int>();
    } else if (auto pt = probs.find(key); pt != probs.end()) {
      *pt->second = value.get<double>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw std::invalid_argument("unknown sampler config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// RNG

Rng Rng::for_index(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return Rng(z ^ (z >> 31));
}

std::int64_t Rng::uniform(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("empty uniform range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(gen_());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

double Rng::unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Sampling

namespace {

struct DeadEnd {};

/// Program under construction with the value of every line.
class Builder {
 public:
  explicit Builder(const SamplerConfig& cfg) : cfg_(cfg) {}

  std::size_t add(Line line) {
    if (prog_.lines.size() >= static_cast<std::size_t>(cfg_.max_lines)) throw DeadEnd{};
    std::uint64_t steps = 0;
    auto r = evaluate_line(line, prog_.lines.size(), values_, steps, kDefaultStepBudget);
    if (!r.ok() || r.value().empty()) throw DeadEnd{};
    prog_.lines.push_back(std::move(line));
    values_.push_back(r.value());
    return prog_.lines.size() - 1;
  }
  /// Evaluates `line` as if appended, without committing it.
  std::optional<ByteSeq> trial(const Line& line) const {
    std::uint64_t steps = 0;
    auto r = evaluate_line(line, prog_.lines.size(), values_, steps, kDefaultStepBudget);
    if (!r.ok() || r.value().empty() ||
        r.value().size() > static_cast<std::size_t>(cfg_.max_sequence_length)) {
      return std::nullopt;
    }
    return r.value();
  }
  const ByteSeq& value(std::size_t i) const { return values_[i]; }
  bool full() const { return prog_.lines.size() + 2 > static_cast<std::size_t>(cfg_.max_lines); }
  Program finish(std::size_t output) {
    prog_.output_ref = output;
    return std::move(prog_);
  }

 private:
  const SamplerConfig& cfg_;
  Program prog_;
  std::vector<ByteSeq> values_;
};

std::size_t sample_initiator(const SamplerConfig& cfg, Rng& rng, Builder& b) {
  const std::int64_t len = rng.uniform(cfg.fixed_len_min, cfg.fixed_len_max);
  switch (rng.uniform(0, 2)) {
    case 0: {
      ByteSeq values(static_cast<std::size_t>(len));
      for (auto& v : values) v = static_cast<std::uint8_t>(rng.uniform(0, 255));
      return b.add(ops::set_list(std::move(values)));
    }
    case 1: {
      if (rng.bernoulli(0.5)) {
        const std::int64_t start = rng.uniform(0, 255 - (len - 1));
        return b.add(ops::range_up(start, start + len - 1));
      }
      const std::int64_t step = rng.uniform(2, cfg.max_step);
      const std::int64_t n = std::min(len, 255 / step + 1);
      const std::int64_t start = rng.uniform(0, 255 - (n - 1) * step);
      return b.add(ops::range_up_step(start, start + (n - 1) * step, step));
    }
    default:
      return b.add(ops::repeat_num(len, rng.uniform(0, 255)));
  }
}

// Proposes one non-mathematical modification of `src`, or nullopt if the
// drawn operation does not apply.
std::optional<Line> propose_structural(Op op, std::size_t src, const ByteSeq& s, const SamplerConfig& cfg, Rng& rng) {
  const auto len = static_cast<std::int64_t>(s.size());
  const std::int64_t cap = cfg.max_list_len;
  switch (op) {
    case Op::Substitute: {
      const std::int64_t old_value = s[static_cast<std::size_t>(rng.uniform(0, len - 1))];
      std::int64_t new_value = rng.uniform(0, 254);
      if (new_value >= old_value) ++new_value;
      return ops::substitute(src, old_value, new_value);
    }
    case Op::ReverseList:
      if (len < 2) return std::nullopt;
      return ops::reverse_list(src);
    case Op::Subseq: {
      if (len < 2) return std::nullopt;
      const std::int64_t start = rng.uniform(0, std::min(len - 1, cap - 1));
      const std::int64_t span = rng.uniform(1, std::min(len - start, cap));
      if (span == len) return std::nullopt;
      return ops::subseq(src, start, start + span);
    }
    case Op::SubseqStep: {
      if (len < 3) return std::nullopt;
      const std::int64_t step = rng.uniform(2, cfg.max_step);
      const std::int64_t start = rng.uniform(0, std::min(len - 1, cap - 1));
      const std::int64_t span = rng.uniform(1, std::min(len - start, cap));
      return ops::subseq_step(src, start, start + span, step);
    }
    case Op::RepeatList: {
      const std::int64_t max_times = std::min<std::int64_t>(cfg.max_repetitions, cfg.max_sequence_length / len);
      if (max_times < 2) return std::nullopt;
      return ops::repeat_list(src, rng.uniform(2, max_times));
    }
    case Op::MaxN:
    case Op::MinN: {
      const std::int64_t n = rng.uniform(1, std::min(len, cap));
      return op == Op::MaxN ? ops::max_n(src, n) : ops::min_n(src, n);
    }
    default:
      return std::nullopt;
  }
}

std::optional<Line> propose_math(Op op, std::size_t src, const ByteSeq& s, Rng& rng) {
  const std::int64_t lo = *std::min_element(s.begin(), s.end());
  const std::int64_t hi = *std::max_element(s.begin(), s.end());
  switch (op) {
    case Op::AddConst:
      if (hi >= 255) return std::nullopt;
      return ops::add_const(src, rng.uniform(1, 255 - hi));
    case Op::SubConst:
      if (lo <= 0) return std::nullopt;
      return ops::sub_const(src, rng.uniform(1, lo));
    case Op::ModConst:
      if (hi < 2) return std::nullopt;
      return ops::mod_const(src, rng.uniform(2, hi));
    case Op::ScanAdd:
      return ops::scan_add(src);
    case Op::FilterEven:
      return ops::filter_even(src);
    case Op::FilterOdd:
      return ops::filter_odd(src);
    case Op::FilterNonzero:
      return ops::filter_nonzero(src);
    default:
      return std::nullopt;
  }
}

const std::vector<Op> kStructural = {Op::Substitute, Op::ReverseList, Op::Subseq,  Op::SubseqStep,
                                     Op::RepeatList, Op::MaxN,        Op::MinN};
const std::vector<Op> kMath = {Op::AddConst,   Op::SubConst,  Op::ModConst,     Op::ScanAdd,
                               Op::FilterEven, Op::FilterOdd, Op::FilterNonzero};
const std::vector<Op> kMathMergers = {Op::AddLists, Op::SubLists, Op::ModLists};

// Draws uniformly among the operations of `family` that apply to `src`.
template <class Propose>
std::optional<Line> choose_applicable(const std::vector<Op>& family, const Builder& b, Propose&& propose, Rng& rng) {
  std::vector<Line> applicable;
  for (Op op : family) {
    auto line = propose(op);
    if (line && b.trial(*line)) applicable.push_back(std::move(*line));
  }
  if (applicable.empty()) return std::nullopt;
  return rng.pick(applicable);
}

PairRecord sample_once(const SamplerConfig& cfg, std::int64_t n, Rng& rng) {
  Builder b(cfg);

  // initiators
  std::vector<std::size_t> queue;
  for (std::int64_t i = 0; i < n; ++i) queue.push_back(sample_initiator(cfg, rng, b));

  // non-mathematical modifiers; results may be modified again
  std::vector<std::size_t> pool;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t src = queue[qi];
    std::optional<Line> mod;
    if (!b.full() && rng.bernoulli(cfg.p_nonmath_modifier)) {
      mod = choose_applicable(kStructural, b,
                              [&](Op op) { return propose_structural(op, src, b.value(src), cfg, rng); }, rng);
    }
    if (!mod) {
      pool.push_back(src);
      continue;
    }
    const bool keep = mod->op == Op::Substitute ? !rng.bernoulli(cfg.p_substitute_exclude_original)
                                                : rng.bernoulli(cfg.p_reuse_original);
    queue.push_back(b.add(std::move(*mod)));
    if (keep) pool.push_back(src);
  }

  // mathematical modifiers and filters
  std::vector<std::size_t> next;
  for (std::size_t src : pool) {
    std::optional<Line> mod;
    if (!b.full() && rng.bernoulli(cfg.p_math_modifier)) {
      mod = choose_applicable(kMath, b, [&](Op op) { return propose_math(op, src, b.value(src), rng); }, rng);
    }
    if (!mod) {
      next.push_back(src);
      continue;
    }
    if (rng.bernoulli(cfg.p_reuse_original)) next.push_back(src);
    next.push_back(b.add(std::move(*mod)));
  }
  pool = std::move(next);

  // mathematical mergers consume both operands
  while (pool.size() >= 2 && !b.full() && rng.bernoulli(cfg.p_math_merger)) {
    struct Option {
      Line line;
      std::size_t i, j;
    };
    std::vector<Option> options;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = 0; j < pool.size(); ++j) {
        if (i == j || b.value(pool[i]).size() != b.value(pool[j]).size()) continue;
        for (Op op : kMathMergers) {
          Line l = op == Op::AddLists   ? ops::add_lists(pool[i], pool[j])
                   : op == Op::SubLists ? ops::sub_lists(pool[i], pool[j])
                                        : ops::mod_lists(pool[i], pool[j]);
          if (b.trial(l)) options.push_back({std::move(l), i, j});
        }
      }
    }
    if (options.empty()) break;
    Option chosen = rng.pick(options);
    std::size_t merged = b.add(std::move(chosen.line));
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (k != chosen.i && k != chosen.j) rest.push_back(pool[k]);
    }
    rest.push_back(merged);
    pool = std::move(rest);
  }

  // concatenate / interleave until every sub-sequence is used
  // (already-used sub-sequences may be merged in again)
  std::size_t acc = pool.front();
  std::size_t used = 1;
  while (used < pool.size()) {
    std::size_t operand;
    if (rng.bernoulli(cfg.p_merge_reuse)) {
      operand = pool[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(used) - 1))];
    } else {
      operand = pool[used++];
    }
    const bool concat = rng.bernoulli(cfg.p_concatenate / (cfg.p_concatenate + cfg.p_interleave));
    Line l = concat ? ops::concatenate(acc, operand) : ops::interleave(acc, operand);
    if (!b.trial(l)) throw DeadEnd{};
    acc = b.add(std::move(l));
  }

  PairRecord rec;
  rec.sequence = b.value(acc);
  rec.program = b.finish(acc);
  rec.seq_len = rec.sequence.size();
  rec.bit_cost = program_bit_cost(rec.program, cfg.prior());
  return rec;
}

}  // namespace

PairRecord sample_program(const SamplerConfig& cfg, Rng& rng) {
  // drawn once so that retries do not skew the initiator count
  const auto n = rng.uniform(cfg.n_initiators_min, cfg.n_initiators_max);
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    try {
      PairRecord rec = sample_once(cfg, n, rng);
      auto check = execute_program(rec.program);
      if (check.ok() && check.value() == rec.sequence) return rec;
    } catch (const DeadEnd&) {
    } catch (const CostError&) {
    }
  }
  throw SamplerExhausted("no valid program after " + std::to_string(cfg.max_retries) + " attempts");
}

std::vector<PairRecord> sample_batch_serial(const SamplerConfig& cfg, std::uint64_t first, std::size_t count) {
  std::vector<PairRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::for_index(cfg.seed, first + i);
    out.push_back(sample_program(cfg, rng));
  }
  return out;
}

std::vector<PairRecord> sample_batch_parallel(const SamplerConfig& cfg, std::uint64_t first, std::size_t count) {
  std::vector<PairRecord> out(count);
  std::vector<char> exhausted(count, 0);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    Rng rng = Rng::for_index(cfg.seed, first + k);
    try {
      out[k] = sample_program(cfg, rng);
    } catch (const SamplerExhausted&) {
      exhausted[k] = 1;
    }
  }
  if (std::find(exhausted.begin(), exhausted.end(), 1) != exhausted.end()) {
    throw SamplerExhausted("a sampling stream exhausted its retries");
  }
  return out;
}

namespace {

struct SeqHash {
  std::size_t operator()(const ByteSeq& s) const {
    std::size_t h = 1469598103934665603ull;
    for (auto b : s) h = (h ^ b) * 1099511628211ull;
    return h;
  }
};

void keep_cheaper(PairRecord& slot, PairRecord& rec) {
  if (rec.bit_cost < slot.bit_cost) slot = std::move(rec);
}

}  // namespace

std::vector<PairRecord> dedup_pairs(std::vector<PairRecord> pairs) {
  std::vector<PairRecord> out;
  std::unordered_map<ByteSeq, std::size_t, SeqHash> index;
  for (auto& rec : pairs) {
    if (auto it = index.find(rec.sequence); it != index.end()) {
      keep_cheaper(out[it->second], rec);
    } else {
      index.emplace(rec.sequence, out.size());
      out.push_back(std::move(rec));
    }
  }
  return out;
}

Corpus sample_corpus(const SamplerConfig& cfg, std::size_t n_pairs, std::size_t eval_bytes) {
  cfg.validate();
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");

  Corpus corpus;
  std::unordered_map<ByteSeq, std::size_t, SeqHash> eval_index, train_index;
  std::size_t eval_total = 0;

  const std::size_t batch = 4096;
  // generous ceiling before declaring the generator starved by deduplication
  const std::size_t max_draws = 20 * (n_pairs + eval_bytes / 16) + 100'000;
  std::uint64_t drawn = 0;

  while (eval_total < eval_bytes || corpus.train.size() < n_pairs) {
    if (drawn >= max_draws) throw SamplerExhausted("deduplication starved the corpus request");
    auto records = sample_batch_parallel(cfg, drawn, batch);
    drawn += batch;
    for (auto& rec : records) {
      if (auto it = eval_index.find(rec.sequence); it != eval_index.end()) {
        keep_cheaper(corpus.eval[it->second], rec);
        continue;
      }
      if (auto it = train_index.find(rec.sequence); it != train_index.end()) {
        keep_cheaper(corpus.train[it->second], rec);
        continue;
      }
      if (eval_total < eval_bytes) {
        eval_total += rec.sequence.size();
        eval_index.emplace(rec.sequence, corpus.eval.size());
        corpus.eval.push_back(std::move(rec));
      } else if (corpus.train.size() < n_pairs) {
        train_index.emplace(rec.sequence, corpus.train.size());
        corpus.train.push_back(std::move(rec));
      }
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Emission

std::string abbreviate_seq(const ByteSeq& seq) {
  if (seq.size() <= 8) return format_seq(seq);
  const std::size_t n = seq.size();
  return "[" + std::to_string(seq[0]) + ", " + std::to_string(seq[1]) + ", ..., " + std::to_string(seq[n - 2]) +
         ", " + std::to_string(seq[n - 1]) + "]";
}

std::string render_with_feedback(const Program& p, NameStyle style) {
  auto trace = execute_with_feedback(p);
  std::string out;
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    out += render_line(p.lines[i], i, style);
    if (i < trace.size()) {
      out += " # ";
      out += trace[i].result.ok() ? abbreviate_seq(trace[i].result.value())
                                  : "error: " + std::string(to_string(trace[i].result.error().kind));
    }
    out += '\n';
  }
  out += "output = " + line_name(p.output_ref);
  if (p.output_ref < trace.size() && trace[p.output_ref].result.ok()) {
    out += " # " + abbreviate_seq(trace[p.output_ref].result.value());
  }
  return out;
}

std::string emit_training_pairs(const std::vector<PairRecord>& pairs, Feedback feedback, NameStyle style) {
  std::string out;
  for (const auto& rec : pairs) {
    auto check = execute_program(rec.program);
    if (!check.ok() || check.value() != rec.sequence) {
      throw std::logic_error("pair record does not execute to its sequence");
    }
    nlohmann::json j;
    j["sequence"] = rec.sequence;
    j["program_text"] = feedback == Feedback::Inline ? render_with_feedback(rec.program, style)
                                                     : render_program(rec.program, style);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace kt
