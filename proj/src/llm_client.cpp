#include "kt/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace kt {

namespace {

using nlohmann::json;

constexpr std::string_view kSystem =
    "Generate a Python program that, when executed, reproduces a specified input sequence. "
    "The program should be as concise as possible.";

constexpr std::string_view kBullets =
    "Instructions:\n"
    "- Write a multi-line Python program. Each line should either assign a new variable or define a new function.\n"
    "- These variables and functions can be reused throughout the program.\n"
    "- Identify and utilize patterns in the input sequence to minimize the length of the program.\n"
    "- Assign the final output of the sequence to the variable output. This output will be used to verify the "
    "correctness of the program.\n"
    "- Do not include print statements or return statements.\n"
    "- Ensure that the generated code is executable in a Python interpreter without modifications.\n"
    "- Do not include the python code block syntax in your response.\n"
    "- End your response with ###.\n";

constexpr std::string_view kThought =
    "- Before the program, you can use the Thought field to generate how you think the task should be solved. "
    "After the thought, generate \"The Python program that generates the sequence is:\", followed by the program.\n";

constexpr std::string_view kTail =
    "\n"
    "### Input Sequence:\n"
    "#SEQ#\n"
    "\n"
    "### Expected Output:\n"
    "The Python program that generates the sequence is:";

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_fences(std::string_view s) {
  std::string out;
  std::istringstream in{std::string(s)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).rfind("```", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

// Drops a partial last line left by a killed run so appends start clean.
void drop_torn_tail(const std::filesystem::path& out) {
  std::error_code ec;
  if (!std::filesystem::exists(out, ec)) return;
  std::string text;
  {
    std::ifstream in(out, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (text.empty() || text.back() == '\n') return;
  auto keep = text.rfind('\n');
  std::filesystem::resize_file(out, keep == std::string::npos ? 0 : keep + 1);
}

std::set<std::size_t> answered_chunks(const std::filesystem::path& out) {
  std::set<std::size_t> done;
  std::ifstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("chunk")) continue;
    if (!j.contains("endpoint_error")) done.insert(j["chunk"].get<std::size_t>());
  }
  return done;
}

}  // namespace

PromptVariant variant_from_string(std::string_view name) {
  if (name == "plain") return PromptVariant::Plain;
  if (name == "cot") return PromptVariant::Cot;
  throw std::invalid_argument("unknown prompt variant: " + std::string(name));
}

std::string_view to_string(PromptVariant v) { return v == PromptVariant::Plain ? "plain" : "cot"; }

const PromptTemplate& prompt_template(PromptVariant v) {
  static const PromptTemplate plain{std::string(kSystem), std::string(kBullets) + std::string(kTail), PromptVariant::Plain};
  static const PromptTemplate cot{std::string(kSystem),
                                  std::string(kBullets) + std::string(kThought) + "\n" + std::string(kTail),
                                  PromptVariant::Cot};
  return v == PromptVariant::Plain ? plain : cot;
}

std::string render_prompt(const ByteSeq& chunk, PromptVariant v) {
  std::string text = prompt_template(v).instructions;
  text.replace(text.find(kSeqPlaceholder), kSeqPlaceholder.size(), format_seq(chunk));
  return text;
}

std::string parse_response(std::string_view text, PromptVariant v) {
  if (v == PromptVariant::Cot) {
    auto at = text.rfind(kProgramMarker);
    if (at != std::string_view::npos) text.remove_prefix(at + kProgramMarker.size());
  }
  if (auto stop = text.find("###"); stop != std::string_view::npos) text = text.substr(0, stop);
  std::string code = trim(strip_fences(text));
  if (code.empty()) throw ParseFailure("response contains no program");
  return code;
}

HttplibTransport::HttplibTransport(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

HttpResponse HttplibTransport::post(const std::string& path, const std::string& body, const Headers& headers) {
  httplib::Client cli(base_url_);
  const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s_));
  cli.set_connection_timeout(t);
  cli.set_read_timeout(t);
  cli.set_write_timeout(t);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = cli.Post(path, h, body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

std::string build_request_body(const EndpointConfig& ep, PromptVariant v, const ByteSeq& chunk) {
  const auto& tpl = prompt_template(v);
  json j{{"model", ep.model},
         {"messages",
          json::array({{{"role", "system"}, {"content", tpl.system}}, {{"role", "user"}, {"content", render_prompt(chunk, v)}}})},
         {"temperature", ep.temperature},
         {"max_tokens", ep.max_tokens}};
  return j.dump();
}

std::string extract_content(std::string_view response_body) {
  auto j = json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("response is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw std::runtime_error("response has no choices[0].message.content");
  }
}

std::string provenance_of(const EndpointConfig& ep, PromptVariant v) {
  json j{{"model", ep.model},
         {"endpoint", ep.base_url + ep.path},
         {"variant", to_string(v)},
         {"temperature", ep.temperature},
         {"max_tokens", ep.max_tokens}};
  return j.dump();
}

bool retryable_status(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

FetchSummary fetch_candidates(const std::vector<Chunk>& chunks, const EndpointConfig& ep, PromptVariant v,
                              Transport& transport, const std::filesystem::path& out, const FetchOptions& opt) {
  FetchSummary sum;
  drop_torn_tail(out);
  const auto done = answered_chunks(out);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (done.count(i)) ++sum.skipped;
    else todo.push_back(i);
  }
  if (todo.empty()) return sum;

  std::ofstream sink(out, std::ios::app);
  if (!sink) throw IoError("cannot append to " + out.string());
  std::mutex sink_mu;

  Headers headers;
  if (const char* key = std::getenv(ep.api_key_env.c_str()); key && *key)
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  const std::string prov = provenance_of(ep, v);
  auto sleep = opt.sleep ? opt.sleep : [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };

  std::atomic<std::size_t> next{0}, requested{0}, ok{0}, bad{0}, failed{0}, retries{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
      const std::size_t i = todo[k];
      const std::string body = build_request_body(ep, v, chunks[i].data);
      json rec{{"chunk", i}, {"source", "python"}, {"provenance", prov}};
      HttpResponse res;
      for (int attempt = 0;; ++attempt) {
        ++requested;
        res = transport.post(ep.path, body, headers);
        if (!retryable_status(res.status) || attempt >= ep.max_retries) break;
        ++retries;
        sleep(std::chrono::duration<double>(std::min(ep.backoff_max_s, ep.backoff_initial_s * std::ldexp(1.0, attempt))));
      }
      if (res.status != 200) {
        rec["code"] = "";
        rec["endpoint_error"] = res.status ? "HTTP " + std::to_string(res.status) : "transport: " + res.error;
        ++failed;
      } else {
        try {
          std::string content = extract_content(res.body);
          try {
            rec["code"] = parse_response(content, v);
            ++ok;
          } catch (const ParseFailure&) {
            rec["code"] = content;
            rec["non_parsing"] = true;
            ++bad;
          }
        } catch (const std::runtime_error& e) {
          rec["code"] = "";
          rec["endpoint_error"] = e.what();
          ++failed;
        }
      }
      std::lock_guard lock(sink_mu);
      sink << rec.dump() << '\n';
      sink.flush();
    }
  };
  const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opt.concurrency, 1)), 1, todo.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  sum.requested = requested;
  sum.succeeded = ok;
  sum.non_parsing = bad;
  sum.failed = failed;
  sum.retries = retries;
  return sum;
}

}  // namespace kt
