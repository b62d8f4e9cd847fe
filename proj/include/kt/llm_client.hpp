#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kt/corpus.hpp"
#include "kt/harness.hpp"

namespace kt {

enum class PromptVariant { Plain, Cot };

PromptVariant variant_from_string(std::string_view name);
std::string_view to_string(PromptVariant v);

inline constexpr std::string_view kSeqPlaceholder = "#SEQ#";
inline constexpr std::string_view kProgramMarker = "The Python program that generates the sequence is:";

struct PromptTemplate {
  std::string system;
  std::string instructions;  // contains kSeqPlaceholder once
  PromptVariant variant = PromptVariant::Plain;
};

const PromptTemplate& prompt_template(PromptVariant v);

/// User message with the placeholder replaced by "[v1, v2, ...]".
std::string render_prompt(const ByteSeq& chunk, PromptVariant v);

class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extracts the program text from a model reply: CoT replies start after
/// the last program marker, everything from the first "###" on is dropped,
/// and code fences are removed. Throws ParseFailure if nothing is left.
std::string parse_response(std::string_view text, PromptVariant v = PromptVariant::Plain);

struct EndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_tokens = 1024;
  double timeout_s = 60.0;
  int max_retries = 5;
  double backoff_initial_s = 1.0;
  double backoff_max_s = 30.0;
};

struct HttpResponse {
  int status = 0;      // 0 when the request never got a response
  std::string body;
  std::string error;   // transport-level failure
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be safe to call from several threads at once.
  virtual HttpResponse post(const std::string& path, const std::string& body, const Headers& headers) = 0;
};

/// HTTP(S) via cpp-httplib, one connection per request.
class HttplibTransport : public Transport {
 public:
  HttplibTransport(std::string base_url, double timeout_s);
  HttpResponse post(const std::string& path, const std::string& body, const Headers& headers) override;

 private:
  std::string base_url_;
  double timeout_s_;
};

/// Chat-completions request body for one chunk.
std::string build_request_body(const EndpointConfig& ep, PromptVariant v, const ByteSeq& chunk);
/// `choices[0].message.content`; throws std::runtime_error when absent.
std::string extract_content(std::string_view response_body);

/// Provenance string recorded on each candidate; never contains the key.
std::string provenance_of(const EndpointConfig& ep, PromptVariant v);

bool retryable_status(int status);

struct FetchOptions {
  int concurrency = 4;
  /// Injected for tests; defaults to a real sleep.
  std::function<void(std::chrono::duration<double>)> sleep;
};

struct FetchSummary {
  std::size_t requested = 0;  // requests issued in this run
  std::size_t skipped = 0;    // already answered in the output file
  std::size_t succeeded = 0;  // parsed into code
  std::size_t non_parsing = 0;
  std::size_t failed = 0;     // endpoint errors after retries
  std::size_t retries = 0;
};

/// Appends one candidate line per chunk to `out`. Chunks that already have
/// an answer there are skipped; endpoint failures are recorded per chunk
/// and retried on the next run.
FetchSummary fetch_candidates(const std::vector<Chunk>& chunks, const EndpointConfig& ep, PromptVariant v,
                              Transport& transport, const std::filesystem::path& out, const FetchOptions& opt = {});

}  // namespace kt
