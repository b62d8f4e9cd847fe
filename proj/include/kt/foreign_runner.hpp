#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kt/dsl.hpp"

namespace kt {

struct RunRequest {
  std::string code;
  double timeout_s = 5.0;
  std::uint64_t mem_bytes = 512ull << 20;
};

// Unavailable is host-side only: the runner could not be started or broke
// the protocol.
enum class RunStatus { Ok, Exception, Timeout, NoOutput, BadType, Unavailable };

std::string_view to_string(RunStatus s);

struct RunResult {
  RunStatus status = RunStatus::Unavailable;
  ByteSeq output;            // only for Ok
  std::string stderr_text;   // guest excerpt or host diagnostic
};

/// Executes free-form candidate code somewhere else and reports `output`.
class ForeignRunner {
 public:
  virtual ~ForeignRunner() = default;
  virtual bool available() const = 0;
  /// Must be safe to call from several threads at once.
  virtual RunResult run(const RunRequest& req) = 0;
};

/// Request line `{"code", "timeout_s", "mem_bytes"}`.
std::string encode_run_request(const RunRequest& req);
/// Parses the runner's stdout `{"status", "output"?, "stderr"?}`. Any
/// violation of the contract yields Unavailable with a diagnostic; an
/// output that is not a flat list of 0..255 integers yields BadType.
RunResult decode_run_result(std::string_view line);

/// Spawns `argv` once per request, writes the request to its stdin and
/// reads one JSON object from its stdout. The child is killed if it is
/// still alive `grace_s` after the request's timeout.
class ProcessRunner : public ForeignRunner {
 public:
  explicit ProcessRunner(std::vector<std::string> argv, double grace_s = 1.0);

  bool available() const override;
  RunResult run(const RunRequest& req) override;

 private:
  std::vector<std::string> argv_;
  double grace_s_;
};

}  // namespace kt
