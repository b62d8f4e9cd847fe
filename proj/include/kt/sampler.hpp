#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kt/codec/prior.hpp"
#include "kt/dsl.hpp"

namespace kt {

/// Hyperparameters of the program distribution. The first block are the
/// standard generator settings; the last block are local calibration knobs.
struct SamplerConfig {
  int n_initiators_min = 1;
  int n_initiators_max = 5;
  int fixed_len_min = 5;
  int fixed_len_max = 25;
  double p_nonmath_modifier = 0.4;
  double p_reuse_original = 0.2;
  double p_substitute_exclude_original = 0.25;
  double p_math_modifier = 0.4;
  double p_math_merger = 0.4;
  double p_concatenate = 0.8;
  double p_interleave = 0.2;
  int byte_size = 8;
  int max_repetitions = 25;
  int max_list_len = 25;
  int max_step = 5;
  std::uint64_t seed = 0;

  // calibration knobs
  int max_sequence_length = 450;   // cap on any intermediate sequence
  int max_lines = 64;              // cap on program length
  int max_retries = 100;
  double p_merge_reuse = 0.25;     // chance a merge step takes an already-merged operand

  /// Throws std::invalid_argument if a field is out of range.
  void validate() const;
  PriorCostModel prior() const;
};

/// Loads `key = value` / JSON config overrides onto the defaults.
SamplerConfig load_sampler_config(const std::filesystem::path& path, SamplerConfig base = {});

class SamplerExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairRecord {
  Program program;
  ByteSeq sequence;
  double bit_cost = 0.0;
  std::size_t seq_len = 0;
};

/// mt19937_64 with portable bounded draws (std distributions differ across
/// standard libraries, so they are not used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  /// Independent stream for item `index` of a run seeded with `seed`.
  static Rng for_index(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return gen_(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);
  double unit();
  bool bernoulli(double p) { return unit() < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 gen_;
};

PairRecord sample_program(const SamplerConfig& cfg, Rng& rng);

/// Sample `count` pairs with stream indices first..first+count-1.
std::vector<PairRecord> sample_batch_serial(const SamplerConfig& cfg, std::uint64_t first, std::size_t count);
std::vector<PairRecord> sample_batch_parallel(const SamplerConfig& cfg, std::uint64_t first, std::size_t count);

/// Collapses records with equal sequences, keeping the cheapest program
/// (the first one on ties), in first-seen order.
std::vector<PairRecord> dedup_pairs(std::vector<PairRecord> pairs);

struct Corpus {
  std::vector<PairRecord> train;
  std::vector<PairRecord> eval;
};

/// Deduplicated corpora: the eval split fills until it holds at least
/// `eval_bytes` sequence bytes, then `n_pairs` training pairs whose
/// sequences never occur in eval. Duplicates keep the cheapest program.
Corpus sample_corpus(const SamplerConfig& cfg, std::size_t n_pairs, std::size_t eval_bytes);

enum class Feedback { None, Inline };

/// `[a, b, ..., y, z]` for lists longer than 8, the full list otherwise.
std::string abbreviate_seq(const ByteSeq& seq);

/// Program text with every line annotated by its executed value.
std::string render_with_feedback(const Program& p, NameStyle style = NameStyle::Canonical);

/// JSON lines `{"sequence": [...], "program_text": "..."}`.
std::string emit_training_pairs(const std::vector<PairRecord>& pairs, Feedback feedback,
                                NameStyle style = NameStyle::Canonical);

}  // namespace kt
