#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "kt/codec/container.hpp"
#include "kt/corpus.hpp"
#include "kt/harness.hpp"
#include "kt/llm_client.hpp"
#include "kt/sampler.hpp"

namespace fs = std::filesystem;
using namespace kt;

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string pairs_jsonl(const std::vector<PairRecord>& pairs) { return emit_training_pairs(pairs, Feedback::None); }

int cmd_sample(std::size_t n, std::uint64_t seed, std::size_t eval_bytes, const std::string& feedback,
               const fs::path& out, const std::string& config) {
  SamplerConfig cfg = config.empty() ? SamplerConfig{} : load_sampler_config(config);
  cfg.seed = seed;
  Corpus c = sample_corpus(cfg, n, eval_bytes);
  fs::create_directories(out);
  const Feedback fb = feedback == "inline" ? Feedback::Inline : Feedback::None;
  write_file(out / "train.jsonl", emit_training_pairs(c.train, fb));
  write_file(out / "eval.jsonl", pairs_jsonl(c.eval));
  write_file(out / "eval_chunks.jsonl", chunks_to_jsonl(pairs_to_chunks(c.eval)));
  std::vector<Candidate> gold;
  for (std::size_t i = 0; i < c.eval.size(); ++i) gold.push_back(dsl_candidate(i, c.eval[i].program, "gold"));
  write_file(out / "gold_candidates.jsonl", candidates_to_jsonl(gold));
  std::size_t bytes = 0;
  for (const auto& p : c.eval) bytes += p.seq_len;
  std::printf("train %zu pairs, eval %zu pairs (%zu bytes) -> %s\n", c.train.size(), c.eval.size(), bytes,
              out.string().c_str());
  return 0;
}

int cmd_ingest(const std::string& modality, const std::vector<std::string>& inputs, std::size_t window,
               std::size_t budget, const fs::path& out) {
  const Modality m = modality_from_string(modality);
  std::vector<OriginStream> streams;
  for (const auto& in : inputs) {
    switch (m) {
      case Modality::Text: streams.push_back(load_text(in)); break;
      case Modality::Raw: streams.push_back(load_raw(in)); break;
      case Modality::Audio16: streams.push_back(load_wav_pcm(in, 16)); break;
      case Modality::Audio8: streams.push_back(load_wav_pcm(in, 8)); break;
      case Modality::Dna: {
        FastaStats st;
        streams.push_back(load_fasta(in, &st));
        if (st.skipped) std::fprintf(stderr, "warning: %s: skipped %zu symbols outside ACGTacgt\n", in.c_str(), st.skipped);
        break;
      }
    }
  }
  auto chunks = chunk_streams(streams, window, budget ? std::optional<std::size_t>(budget) : std::nullopt);
  write_file(out, chunks_to_jsonl(chunks));
  std::size_t bytes = 0;
  for (const auto& c : chunks) bytes += c.data.size();
  std::printf("%zu chunks, %zu bytes -> %s\n", chunks.size(), bytes, out.string().c_str());
  return 0;
}

int cmd_eval(const fs::path& chunks_path, const fs::path& cands_path, const std::string& prior, double timeout,
             const std::string& runner_cmd, int concurrency, const fs::path& report, const fs::path& csv) {
  auto chunks = chunks_from_jsonl(read_file(chunks_path));
  std::vector<Candidate> cands;
  if (!cands_path.empty()) cands = candidates_from_jsonl(read_file(cands_path));
  ScoreOptions opt;
  opt.prior = prior == "gzip" ? ProgramPrior::Gzip : ProgramPrior::Uniform;
  opt.timeout_s = timeout;
  opt.concurrency = concurrency;
  std::unique_ptr<ProcessRunner> runner;
  if (!runner_cmd.empty()) runner = std::make_unique<ProcessRunner>(split_words(runner_cmd));
  Report rep = run_benchmark(chunks, cands, opt, runner.get());
  if (!report.empty()) write_file(report, report_to_json(rep));
  if (!csv.empty()) write_file(csv, report_to_csv(rep));
  std::cout << report_to_csv(rep);
  if (rep.container_cr) std::printf("container CR %.6f\n", *rep.container_cr);
  return 0;
}

int cmd_fetch(const fs::path& chunks_path, const EndpointConfig& ep, const std::string& variant, int concurrency,
              const fs::path& out) {
  auto chunks = chunks_from_jsonl(read_file(chunks_path));
  HttplibTransport transport(ep.base_url, ep.timeout_s);
  FetchOptions fo;
  fo.concurrency = concurrency;
  auto s = fetch_candidates(chunks, ep, variant_from_string(variant), transport, out, fo);
  std::printf("requested %zu, skipped %zu, ok %zu, non-parsing %zu, failed %zu, retries %zu\n", s.requested, s.skipped,
              s.succeeded, s.non_parsing, s.failed, s.retries);
  return s.failed ? 2 : 0;
}

int cmd_compress(const fs::path& chunks_path, const fs::path& cands_path, const fs::path& out) {
  auto chunks = chunks_from_jsonl(read_file(chunks_path));
  std::vector<ByteSeq> data;
  for (auto& c : chunks) data.push_back(std::move(c.data));
  std::vector<std::optional<Program>> progs;
  if (!cands_path.empty()) {
    progs.resize(data.size());
    auto table = index_candidates(data.size(), candidates_from_jsonl(read_file(cands_path)));
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!table[i] || !table[i]->program) continue;
      auto r = execute_program(*table[i]->program);
      if (r.ok() && r.value() == data[i]) progs[i] = table[i]->program;
    }
  }
  auto res = compress_container(data, progs);
  write_file(out, std::string_view(reinterpret_cast<const char*>(res.bytes.data()), res.bytes.size()));
  double raw = 0;
  for (const auto& d : data) raw += 8.0 * static_cast<double>(d.size());
  std::printf("%zu bytes, CR %.6f\n", res.bytes.size(), 8.0 * static_cast<double>(res.bytes.size()) / raw);
  return 0;
}

int cmd_decompress(const fs::path& in, const fs::path& out) {
  std::string blob = read_file(in);
  auto chunks = decompress_container(std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
  std::string joined;
  for (const auto& c : chunks) joined.append(c.begin(), c.end());
  write_file(out, joined);
  std::printf("%zu chunks, %zu bytes\n", chunks.size(), joined.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Program-based sequence compression benchmark"};
  app.require_subcommand(1);

  auto* sample = app.add_subcommand("sample", "sample program/sequence corpora");
  std::size_t n = 1000, eval_bytes = 1'000'105;
  std::uint64_t seed = 0;
  std::string feedback = "none", config;
  fs::path sample_out;
  sample->add_option("--n", n, "training pairs")->capture_default_str();
  sample->add_option("--seed", seed)->capture_default_str();
  sample->add_option("--eval-bytes", eval_bytes)->capture_default_str();
  sample->add_option("--feedback", feedback)->check(CLI::IsMember({"none", "inline"}))->capture_default_str();
  sample->add_option("--out", sample_out)->required();
  sample->add_option("--config", config, "JSON overrides for the sampler");

  auto* ingest = app.add_subcommand("ingest", "load files and cut them into chunks");
  std::string modality;
  std::vector<std::string> inputs;
  std::size_t window = 128, budget = 0;
  fs::path ingest_out;
  ingest->add_option("--modality", modality)->required()->check(CLI::IsMember({"text", "dna", "audio16", "audio8", "raw"}));
  ingest->add_option("--window", window)->capture_default_str();
  ingest->add_option("--budget", budget, "total bytes, 0 = everything");
  ingest->add_option("--out", ingest_out)->required();
  ingest->add_option("inputs", inputs)->required();

  auto* eval = app.add_subcommand("eval", "score candidates against chunks");
  fs::path chunks_path, cands_path, report, csv;
  std::string prior = "uniform", runner;
  double timeout = 5.0;
  int concurrency = 4;
  eval->add_option("--chunks", chunks_path)->required();
  eval->add_option("--candidates", cands_path);
  eval->add_option("--prior", prior)->check(CLI::IsMember({"uniform", "gzip"}))->capture_default_str();
  eval->add_option("--timeout", timeout)->capture_default_str();
  eval->add_option("--runner", runner, "command that executes Python candidates");
  eval->add_option("--concurrency", concurrency)->capture_default_str();
  eval->add_option("--report", report);
  eval->add_option("--csv", csv);

  auto* fetch = app.add_subcommand("fetch", "query a chat-completions endpoint for candidates");
  EndpointConfig ep;
  std::string variant = "plain";
  fs::path fetch_out;
  fetch->add_option("--chunks", chunks_path)->required();
  fetch->add_option("--endpoint", ep.base_url)->capture_default_str();
  fetch->add_option("--path", ep.path)->capture_default_str();
  fetch->add_option("--model", ep.model)->capture_default_str();
  fetch->add_option("--api-key-env", ep.api_key_env)->capture_default_str();
  fetch->add_option("--temperature", ep.temperature)->capture_default_str();
  fetch->add_option("--max-tokens", ep.max_tokens)->capture_default_str();
  fetch->add_option("--retries", ep.max_retries)->capture_default_str();
  fetch->add_option("--variant", variant)->check(CLI::IsMember({"plain", "cot"}))->capture_default_str();
  fetch->add_option("--concurrency", concurrency)->capture_default_str();
  fetch->add_option("--out", fetch_out)->required();

  auto* compress = app.add_subcommand("compress", "write a container file");
  fs::path comp_out;
  compress->add_option("--chunks", chunks_path)->required();
  compress->add_option("--candidates", cands_path);
  compress->add_option("--out", comp_out)->required();

  auto* decompress = app.add_subcommand("decompress", "restore the bytes of a container file");
  fs::path dec_in, dec_out;
  decompress->add_option("--in", dec_in)->required();
  decompress->add_option("--out", dec_out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sample) return cmd_sample(n, seed, eval_bytes, feedback, sample_out, config);
    if (*ingest) return cmd_ingest(modality, inputs, window, budget, ingest_out);
    if (*eval) return cmd_eval(chunks_path, cands_path, prior, timeout, runner, concurrency, report, csv);
    if (*fetch) return cmd_fetch(chunks_path, ep, variant, concurrency, fetch_out);
    if (*compress) return cmd_compress(chunks_path, cands_path, comp_out);
    if (*decompress) return cmd_decompress(dec_in, dec_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
