#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kt/codec/prior.hpp"
#include "kt/corpus.hpp"
#include "kt/dsl.hpp"
#include "kt/foreign_runner.hpp"
#include "kt/sampler.hpp"

namespace kt {

enum class CandidateSource { Dsl, Python };

struct Candidate {
  std::size_t chunk = 0;  // index into the chunk list
  CandidateSource source = CandidateSource::Dsl;
  std::optional<Program> program;  // parsed DSL payload
  std::string code;                // DSL or Python text as received
  std::string provenance;
  bool non_parsing = false;
  std::string diagnostic;
};

/// Parses `text` as DSL; a parse failure gives a non-parsing candidate.
Candidate dsl_candidate(std::size_t chunk, std::string text, std::string provenance = "");
Candidate dsl_candidate(std::size_t chunk, const Program& p, std::string provenance = "");
Candidate python_candidate(std::size_t chunk, std::string code, std::string provenance = "");

enum class ExecStatus { Correct, WrongOutput, ExecError, Timeout, NonParsing };

std::string_view to_string(ExecStatus s);

/// How programs are charged: `Uniform` codes DSL programs under the prior,
/// `Gzip` charges the DEFLATE size of the program text. Python code is
/// always charged by DEFLATE.
enum class ProgramPrior { Uniform, Gzip };

struct ScoreOptions {
  ProgramPrior prior = ProgramPrior::Uniform;
  PriorCostModel model{};
  double timeout_s = 5.0;
  std::uint64_t mem_bytes = 512ull << 20;
  std::uint64_t step_budget = kDefaultStepBudget;
  int concurrency = 4;  // in-flight foreign runs
};

struct EvalRecord {
  std::size_t chunk = 0;
  std::string origin;
  Modality modality = Modality::Raw;
  std::size_t length = 0;
  bool has_candidate = false;
  ExecStatus status = ExecStatus::NonParsing;
  std::optional<double> bits_program;  // when a program was costed
  double bits_raw = 0.0;               // 8 x length
  double bits_gzip = 0.0;              // deflate_cost of the chunk bytes
  int acc = 0;
  double cr = 0.0;
  std::optional<double> precision;     // only when correct
  std::optional<double> precision_literal;
  std::string diagnostic;

  bool executable() const { return status == ExecStatus::Correct || status == ExecStatus::WrongOutput; }
};

/// Cost the chunk would have under plain back-off: y = x.
double backoff_cr(std::size_t length);

/// Scores one candidate. Python candidates need `foreign`, the result of
/// running their code; without it they are exec errors.
EvalRecord score(const Chunk& chunk, std::size_t chunk_index, const Candidate* cand, const ScoreOptions& opt,
                 const RunResult* foreign = nullptr);

/// The chunk reproduces itself; precision is 1 by convention and the
/// formula value 8L / gzip is kept in precision_literal.
EvalRecord repeat_seq_baseline(const Chunk& chunk, std::size_t chunk_index = 0);

/// Sequences as comma-separated decimals, one per line.
std::string newline_framed(const std::vector<ByteSeq>& seqs);
/// gzip baseline over a whole corpus: deflate_cost(newline_framed(seqs))
/// divided by 8 bits per sequence element.
double gzip_corpus_cr(const std::vector<ByteSeq>& seqs);

struct Aggregate {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t executable = 0;
  double bits_y = 0.0;     // sum of 1 + |y|
  double bits_x = 0.0;     // sum of 8 x length
  double precision_sum = 0.0;

  double acc_pct() const { return n ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
  double executable_pct() const { return n ? 100.0 * static_cast<double>(executable) / static_cast<double>(n) : 0.0; }
  double corpus_cr() const { return bits_x > 0 ? bits_y / bits_x : 0.0; }
  /// Mean over correct records; NaN-free: 0 when nothing is correct.
  double mean_precision() const { return correct ? precision_sum / static_cast<double>(correct) : 0.0; }

  void add(const EvalRecord& r);
};

Aggregate aggregate(const std::vector<EvalRecord>& records);

/// Gold programs scored under the uniform prior.
Aggregate upper_bound_baseline(const std::vector<PairRecord>& pairs, const PriorCostModel& m = {});

std::vector<Chunk> pairs_to_chunks(const std::vector<PairRecord>& pairs, std::string origin = "synthetic");

/// Scores every chunk; `cands[i]` is the candidate for chunk i, if any.
/// `foreign[i]` must hold a run result for every Python candidate.
std::vector<EvalRecord> score_all_serial(const std::vector<Chunk>& chunks,
                                         const std::vector<std::optional<Candidate>>& cands,
                                         const ScoreOptions& opt, const std::vector<std::optional<RunResult>>& foreign);
std::vector<EvalRecord> score_all_parallel(const std::vector<Chunk>& chunks,
                                           const std::vector<std::optional<Candidate>>& cands,
                                           const ScoreOptions& opt, const std::vector<std::optional<RunResult>>& foreign);

/// Runs every Python candidate through `runner` with at most
/// `opt.concurrency` in flight. With no usable runner all results are
/// Unavailable.
std::vector<std::optional<RunResult>> run_foreign(const std::vector<std::optional<Candidate>>& cands,
                                                  ForeignRunner* runner, const ScoreOptions& opt);

struct Report {
  std::vector<EvalRecord> records;
  std::map<std::string, Aggregate> by_modality;
  Aggregate overall;
  // whole-corpus container size with correct DSL candidates, uniform prior only
  std::optional<double> container_cr;
  ScoreOptions options;
};

/// Matches candidates to chunks by their `chunk` index; later duplicates win.
std::vector<std::optional<Candidate>> index_candidates(std::size_t n_chunks, const std::vector<Candidate>& cands);

Report run_benchmark(const std::vector<Chunk>& chunks, const std::vector<Candidate>& cands, const ScoreOptions& opt,
                     ForeignRunner* runner = nullptr);

std::string report_to_json(const Report& r);
/// One row per modality plus `all`: modality,n,acc_pct,precision,cr,executable_pct.
std::string report_to_csv(const Report& r);

/// JSON lines `{"chunk", "source", "code", "provenance", "non_parsing"?, "error"?}`.
std::string candidates_to_jsonl(const std::vector<Candidate>& cands);
std::vector<Candidate> candidates_from_jsonl(std::string_view text);

}  // namespace kt
