#include "kt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kt/codec/container.hpp"
#include "kt/codec/deflate.hpp"
#include "kt/codec/errors.hpp"

namespace kt {

namespace {

using nlohmann::json;

ExecStatus from_exec_error(const ExecError& e) {
  return e.kind == ExecErrorKind::StepBudgetExceeded ? ExecStatus::Timeout : ExecStatus::ExecError;
}

void finish(EvalRecord& r) {
  r.acc = r.status == ExecStatus::Correct ? 1 : 0;
  if (r.acc) {
    r.cr = (1.0 + *r.bits_program) / r.bits_raw;
    r.precision = *r.bits_program / r.bits_gzip;
  } else {
    r.cr = backoff_cr(r.length);
    r.precision.reset();
  }
}

void score_dsl(EvalRecord& r, const Chunk& chunk, const Candidate& c, const ScoreOptions& opt) {
  const Program& p = *c.program;
  try {
    r.bits_program = opt.prior == ProgramPrior::Uniform ? program_bit_cost(p, opt.model)
                                                        : deflate_cost(render_program(p));
  } catch (const CostError& e) {
    // the prior cannot express it, so it is not a program of the benchmark language
    r.status = ExecStatus::NonParsing;
    r.diagnostic = std::string("outside prior bounds: ") + e.what();
    return;
  }
  ExecResult res = execute_program(p, opt.step_budget);
  if (!res.ok()) {
    r.status = from_exec_error(res.error());
    r.diagnostic = std::string(to_string(res.error().kind)) + " at line " + std::to_string(res.error().line + 1);
    return;
  }
  r.status = res.value() == chunk.data ? ExecStatus::Correct : ExecStatus::WrongOutput;
}

void score_python(EvalRecord& r, const Chunk& chunk, const Candidate& c, const RunResult* foreign) {
  r.bits_program = deflate_cost(c.code);
  if (!foreign) {
    r.status = ExecStatus::ExecError;
    r.diagnostic = "foreign runner unavailable";
    return;
  }
  r.diagnostic = foreign->stderr_text;
  switch (foreign->status) {
    case RunStatus::Ok:
      r.status = foreign->output == chunk.data ? ExecStatus::Correct : ExecStatus::WrongOutput;
      break;
    case RunStatus::BadType: r.status = ExecStatus::WrongOutput; break;
    case RunStatus::Timeout: r.status = ExecStatus::Timeout; break;
    case RunStatus::Exception:
    case RunStatus::NoOutput:
    case RunStatus::Unavailable: r.status = ExecStatus::ExecError; break;
  }
  if (r.diagnostic.empty() && r.status != ExecStatus::Correct) r.diagnostic = std::string(to_string(foreign->status));
}

template <class Fn>
std::vector<EvalRecord> score_range(const std::vector<Chunk>& chunks, const std::vector<std::optional<Candidate>>& cands,
                                    const std::vector<std::optional<RunResult>>& foreign, Fn&& loop) {
  if (!cands.empty() && cands.size() != chunks.size())
    throw std::invalid_argument("candidate table does not match chunks");
  if (!foreign.empty() && foreign.size() != chunks.size())
    throw std::invalid_argument("foreign results do not match chunks");
  std::vector<EvalRecord> out(chunks.size());
  loop(out);
  return out;
}

const Candidate* cand_at(const std::vector<std::optional<Candidate>>& cands, std::size_t i) {
  return i < cands.size() && cands[i] ? &*cands[i] : nullptr;
}
const RunResult* run_at(const std::vector<std::optional<RunResult>>& foreign, std::size_t i) {
  return i < foreign.size() && foreign[i] ? &*foreign[i] : nullptr;
}

std::string_view source_name(CandidateSource s) { return s == CandidateSource::Dsl ? "dsl" : "python"; }

json aggregate_json(const Aggregate& a) {
  return {{"n", a.n},
          {"acc_pct", a.acc_pct()},
          {"mean_precision", a.mean_precision()},
          {"corpus_cr", a.corpus_cr()},
          {"executable_pct", a.executable_pct()},
          {"bits_y", a.bits_y},
          {"bits_x", a.bits_x}};
}

}  // namespace

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::Correct: return "correct";
    case ExecStatus::WrongOutput: return "wrong-output";
    case ExecStatus::ExecError: return "exec-error";
    case ExecStatus::Timeout: return "timeout";
    case ExecStatus::NonParsing: return "non-parsing";
  }
  return "non-parsing";
}

Candidate dsl_candidate(std::size_t chunk, std::string text, std::string provenance) {
  Candidate c;
  c.chunk = chunk;
  c.source = CandidateSource::Dsl;
  c.provenance = std::move(provenance);
  try {
    c.program = parse_program(text);
  } catch (const ParseError& e) {
    c.non_parsing = true;
    c.diagnostic = e.what();
  }
  c.code = std::move(text);
  return c;
}

Candidate dsl_candidate(std::size_t chunk, const Program& p, std::string provenance) {
  Candidate c;
  c.chunk = chunk;
  c.source = CandidateSource::Dsl;
  c.program = p;
  c.code = render_program(p);
  c.provenance = std::move(provenance);
  return c;
}

Candidate python_candidate(std::size_t chunk, std::string code, std::string provenance) {
  Candidate c;
  c.chunk = chunk;
  c.source = CandidateSource::Python;
  c.code = std::move(code);
  c.provenance = std::move(provenance);
  return c;
}

double backoff_cr(std::size_t length) {
  const double raw = 8.0 * static_cast<double>(length);
  return (1.0 + raw) / raw;
}

EvalRecord score(const Chunk& chunk, std::size_t chunk_index, const Candidate* cand, const ScoreOptions& opt,
                 const RunResult* foreign) {
  if (chunk.data.empty()) throw std::invalid_argument("cannot score an empty chunk");
  EvalRecord r;
  r.chunk = chunk_index;
  r.origin = chunk.origin;
  r.modality = chunk.modality;
  r.length = chunk.data.size();
  r.bits_raw = 8.0 * static_cast<double>(r.length);
  r.bits_gzip = deflate_cost(std::span<const std::uint8_t>(chunk.data));
  r.has_candidate = cand != nullptr;

  if (!cand) {
    r.status = ExecStatus::NonParsing;
    r.diagnostic = "no candidate";
  } else if (cand->non_parsing || (cand->source == CandidateSource::Dsl && !cand->program)) {
    r.status = ExecStatus::NonParsing;
    r.diagnostic = cand->diagnostic.empty() ? "no program" : cand->diagnostic;
  } else if (cand->source == CandidateSource::Dsl) {
    score_dsl(r, chunk, *cand, opt);
  } else {
    score_python(r, chunk, *cand, foreign);
  }
  finish(r);
  return r;
}

EvalRecord repeat_seq_baseline(const Chunk& chunk, std::size_t chunk_index) {
  if (chunk.data.empty()) throw std::invalid_argument("cannot score an empty chunk");
  EvalRecord r;
  r.chunk = chunk_index;
  r.origin = chunk.origin;
  r.modality = chunk.modality;
  r.length = chunk.data.size();
  r.has_candidate = true;
  r.status = ExecStatus::Correct;
  r.bits_raw = 8.0 * static_cast<double>(r.length);
  r.bits_gzip = deflate_cost(std::span<const std::uint8_t>(chunk.data));
  r.bits_program = r.bits_raw;
  r.acc = 1;
  r.cr = backoff_cr(r.length);
  r.precision = 1.0;
  r.precision_literal = r.bits_raw / r.bits_gzip;
  return r;
}

std::string newline_framed(const std::vector<ByteSeq>& seqs) {
  std::string out;
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(s[i]);
    }
    out += '\n';
  }
  return out;
}

double gzip_corpus_cr(const std::vector<ByteSeq>& seqs) {
  double raw = 0.0;
  for (const auto& s : seqs) raw += 8.0 * static_cast<double>(s.size());
  if (raw == 0.0) throw std::invalid_argument("empty corpus");
  return deflate_cost(newline_framed(seqs)) / raw;
}

void Aggregate::add(const EvalRecord& r) {
  ++n;
  if (r.acc) {
    ++correct;
    precision_sum += r.precision.value_or(0.0);
  }
  if (r.executable()) ++executable;
  bits_y += 1.0 + (r.acc ? r.bits_program.value_or(r.bits_raw) : r.bits_raw);
  bits_x += r.bits_raw;
}

Aggregate aggregate(const std::vector<EvalRecord>& records) {
  Aggregate a;
  for (const auto& r : records) a.add(r);
  return a;
}

std::vector<Chunk> pairs_to_chunks(const std::vector<PairRecord>& pairs, std::string origin) {
  std::vector<Chunk> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({origin + "/" + std::to_string(i), 0, pairs[i].sequence, Modality::Raw});
  return out;
}

Aggregate upper_bound_baseline(const std::vector<PairRecord>& pairs, const PriorCostModel& m) {
  auto chunks = pairs_to_chunks(pairs);
  std::vector<std::optional<Candidate>> cands;
  cands.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) cands.emplace_back(dsl_candidate(i, pairs[i].program, "gold"));
  ScoreOptions opt;
  opt.model = m;
  return aggregate(score_all_parallel(chunks, cands, opt, {}));
}

std::vector<EvalRecord> score_all_serial(const std::vector<Chunk>& chunks,
                                         const std::vector<std::optional<Candidate>>& cands, const ScoreOptions& opt,
                                         const std::vector<std::optional<RunResult>>& foreign) {
  return score_range(chunks, cands, foreign, [&](std::vector<EvalRecord>& out) {
    for (std::size_t i = 0; i < chunks.size(); ++i)
      out[i] = score(chunks[i], i, cand_at(cands, i), opt, run_at(foreign, i));
  });
}

std::vector<EvalRecord> score_all_parallel(const std::vector<Chunk>& chunks,
                                           const std::vector<std::optional<Candidate>>& cands,
                                           const ScoreOptions& opt,
                                           const std::vector<std::optional<RunResult>>& foreign) {
  return score_range(chunks, cands, foreign, [&](std::vector<EvalRecord>& out) {
    const auto n = static_cast<std::int64_t>(chunks.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out[k] = score(chunks[k], k, cand_at(cands, k), opt, run_at(foreign, k));
    }
  });
}

std::vector<std::optional<RunResult>> run_foreign(const std::vector<std::optional<Candidate>>& cands,
                                                  ForeignRunner* runner, const ScoreOptions& opt) {
  std::vector<std::optional<RunResult>> out(cands.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i] && cands[i]->source == CandidateSource::Python && !cands[i]->non_parsing) todo.push_back(i);
  if (todo.empty()) return out;

  if (!runner || !runner->available()) {
    for (auto i : todo) out[i] = RunResult{RunStatus::Unavailable, {}, "foreign runner unavailable"};
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
      const auto i = todo[k];
      out[i] = runner->run({cands[i]->code, opt.timeout_s, opt.mem_bytes});
    }
  };
  const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opt.concurrency, 1)), 1, todo.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::vector<std::optional<Candidate>> index_candidates(std::size_t n_chunks, const std::vector<Candidate>& cands) {
  std::vector<std::optional<Candidate>> out(n_chunks);
  for (const auto& c : cands) {
    if (c.chunk >= n_chunks) throw std::out_of_range("candidate for chunk " + std::to_string(c.chunk) + " of " + std::to_string(n_chunks));
    out[c.chunk] = c;
  }
  return out;
}

Report run_benchmark(const std::vector<Chunk>& chunks, const std::vector<Candidate>& cands, const ScoreOptions& opt,
                     ForeignRunner* runner) {
  Report rep;
  rep.options = opt;
  auto table = index_candidates(chunks.size(), cands);
  auto foreign = run_foreign(table, runner, opt);
  rep.records = score_all_parallel(chunks, table, opt, foreign);
  for (const auto& r : rep.records) {
    rep.by_modality[std::string(to_string(r.modality))].add(r);
    rep.overall.add(r);
  }

  if (opt.prior == ProgramPrior::Uniform && !chunks.empty()) {
    std::vector<ByteSeq> data;
    std::vector<std::optional<Program>> progs(chunks.size());
    data.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      data.push_back(chunks[i].data);
      if (rep.records[i].status == ExecStatus::Correct && table[i]->source == CandidateSource::Dsl)
        progs[i] = table[i]->program;
    }
    auto packed = compress_container(data, progs, opt.model);
    rep.container_cr = 8.0 * static_cast<double>(packed.bytes.size()) / rep.overall.bits_x;
  }
  return rep;
}

std::string report_to_json(const Report& rep) {
  json records = json::array();
  for (const auto& r : rep.records) {
    json j{{"chunk", r.chunk},
           {"origin", r.origin},
           {"modality", to_string(r.modality)},
           {"length", r.length},
           {"has_candidate", r.has_candidate},
           {"status", to_string(r.status)},
           {"bits_raw", r.bits_raw},
           {"bits_gzip", r.bits_gzip},
           {"acc", r.acc},
           {"cr", r.cr}};
    j["bits_program"] = r.bits_program ? json(*r.bits_program) : json(nullptr);
    j["precision"] = r.precision ? json(*r.precision) : json(nullptr);
    if (r.precision_literal) j["precision_literal"] = *r.precision_literal;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    records.push_back(std::move(j));
  }
  json by_mod = json::object();
  for (const auto& [m, a] : rep.by_modality) by_mod[m] = aggregate_json(a);

  const auto& o = rep.options;
  json config{{"prior", o.prior == ProgramPrior::Uniform ? "uniform" : "gzip"},
              {"timeout_s", o.timeout_s},
              {"mem_bytes", o.mem_bytes},
              {"step_budget", o.step_budget},
              {"concurrency", o.concurrency},
              {"gzip_level", kGzipLevel},
              {"precision_framing", "raw chunk bytes"},
              {"model",
               {{"num_functions", o.model.num_functions},
                {"byte_size", o.model.byte_size},
                {"max_num_repetitions", o.model.max_num_repetitions},
                {"max_list_len", o.model.max_list_len},
                {"max_step", o.model.max_step}}}};
  json out{{"config", config}, {"aggregates", {{"all", aggregate_json(rep.overall)}, {"by_modality", by_mod}}}, {"records", records}};
  out["aggregates"]["container_cr"] = rep.container_cr ? json(*rep.container_cr) : json(nullptr);
  return out.dump(2) + "\n";
}

std::string report_to_csv(const Report& rep) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "modality,n,acc_pct,precision,cr,executable_pct\n";
  auto row = [&](const std::string& name, const Aggregate& a) {
    os << name << ',' << a.n << ',' << a.acc_pct() << ',' << a.mean_precision() << ',' << a.corpus_cr() << ','
       << a.executable_pct() << '\n';
  };
  for (const auto& [m, a] : rep.by_modality) row(m, a);
  row("all", rep.overall);
  return os.str();
}

std::string candidates_to_jsonl(const std::vector<Candidate>& cands) {
  std::string out;
  for (const auto& c : cands) {
    json j{{"chunk", c.chunk}, {"source", source_name(c.source)}, {"code", c.code}, {"provenance", c.provenance}};
    if (c.non_parsing) j["non_parsing"] = true;
    if (!c.diagnostic.empty()) j["error"] = c.diagnostic;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Candidate> candidates_from_jsonl(std::string_view text) {
  std::vector<Candidate> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line);
    const auto chunk = j.at("chunk").get<std::size_t>();
    const auto source = j.value("source", std::string("dsl"));
    auto code = j.value("code", std::string());
    auto prov = j.value("provenance", std::string());
    Candidate c;
    if (source == "dsl") c = dsl_candidate(chunk, std::move(code), std::move(prov));
    else if (source == "python") c = python_candidate(chunk, std::move(code), std::move(prov));
    else throw std::invalid_argument("unknown candidate source: " + source);
    if (j.value("non_parsing", false)) c.non_parsing = true;
    for (const char* key : {"error", "endpoint_error"}) {
      if (!j.contains(key)) continue;
      c.non_parsing = true;
      c.diagnostic = j[key].get<std::string>();
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace kt
