#include "kt/foreign_runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <mutex>

#include <json.hpp>

namespace kt {

namespace {

constexpr std::size_t kStderrExcerpt = 2000;
constexpr int kExecFailed = 127;

RunResult host_failure(std::string why) { return {RunStatus::Unavailable, {}, std::move(why)}; }

bool executable(const std::filesystem::path& p) { return ::access(p.c_str(), X_OK) == 0; }

bool resolvable(const std::string& cmd) {
  if (cmd.find('/') != std::string::npos) return executable(cmd);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string_view rest(path);
  while (true) {
    auto colon = rest.find(':');
    std::string_view dir = rest.substr(0, colon);
    if (!dir.empty() && executable(std::filesystem::path(dir) / cmd)) return true;
    if (colon == std::string_view::npos) return false;
    rest.remove_prefix(colon + 1);
  }
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Exception: return "exception";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::NoOutput: return "no-output";
    case RunStatus::BadType: return "bad-type";
    case RunStatus::Unavailable: return "unavailable";
  }
  return "unavailable";
}

std::string encode_run_request(const RunRequest& req) {
  nlohmann::json j{{"code", req.code}, {"timeout_s", req.timeout_s}, {"mem_bytes", req.mem_bytes}};
  return j.dump() + "\n";
}

RunResult decode_run_result(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("status") || !j["status"].is_string())
    return host_failure("runner protocol error: " + std::string(line.substr(0, 200)));

  RunResult r;
  if (j.contains("stderr") && j["stderr"].is_string()) r.stderr_text = j["stderr"].get<std::string>();
  const auto status = j["status"].get<std::string>();
  if (status == "exception") r.status = RunStatus::Exception;
  else if (status == "timeout") r.status = RunStatus::Timeout;
  else if (status == "no-output") r.status = RunStatus::NoOutput;
  else if (status == "bad-type") r.status = RunStatus::BadType;
  else if (status != "ok") return host_failure("runner returned unknown status '" + status + "'");
  if (status != "ok") return r;

  if (!j.contains("output") || !j["output"].is_array()) {
    r.status = RunStatus::BadType;
    return r;
  }
  r.status = RunStatus::Ok;
  for (const auto& v : j["output"]) {
    // floats, bools and nested lists are type errors even when they look integral
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 255) {
      r.status = RunStatus::BadType;
      r.output.clear();
      return r;
    }
    r.output.push_back(static_cast<std::uint8_t>(v.get<std::int64_t>()));
  }
  return r;
}

ProcessRunner::ProcessRunner(std::vector<std::string> argv, double grace_s)
    : argv_(std::move(argv)), grace_s_(grace_s) {
  static std::once_flag once;
  // a guest that dies before reading stdin must not kill the host
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

bool ProcessRunner::available() const { return !argv_.empty() && resolvable(argv_[0]); }

RunResult ProcessRunner::run(const RunRequest& req) {
  if (!available()) return host_failure("foreign runner not found: " + (argv_.empty() ? std::string("<empty>") : argv_[0]));

  std::vector<char*> cargv;
  for (auto& a : argv_) cargv.push_back(a.data());
  cargv.push_back(nullptr);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) return host_failure("pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    return host_failure("pipe failed");
  }
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    return host_failure("pipe failed");
  }

  pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    return host_failure("fork failed");
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    ::setpgid(0, 0);
    ::execvp(cargv[0], cargv.data());
    ::_exit(kExecFailed);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  int to_child = in_pipe[1], from_out = out_pipe[0], from_err = err_pipe[0];

  const std::string request = encode_run_request(req);
  std::size_t written = 0;
  ::fcntl(to_child, F_SETFL, O_NONBLOCK);

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(req.timeout_s + grace_s_);
  std::string out, err;
  bool killed = false;
  char buf[4096];
  while (from_out >= 0 || from_err >= 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      killed = true;
      break;
    }
    pollfd fds[3];
    int n = 0;
    int out_i = -1, err_i = -1, in_i = -1;
    if (from_out >= 0) fds[out_i = n++] = {from_out, POLLIN, 0};
    if (from_err >= 0) fds[err_i = n++] = {from_err, POLLIN, 0};
    if (to_child >= 0) fds[in_i = n++] = {to_child, POLLOUT, 0};
    int rc = ::poll(fds, static_cast<nfds_t>(n), static_cast<int>(std::min<long long>(left, 100)));
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    if (in_i >= 0 && fds[in_i].revents) {
      ssize_t w = ::write(to_child, request.data() + written, request.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN) written = request.size();
      if (written == request.size()) close_fd(to_child);
    }
    auto drain = [&](int idx, int& fd, std::string& sink) {
      if (idx < 0 || !fds[idx].revents) return;
      ssize_t r = ::read(fd, buf, sizeof buf);
      if (r > 0) sink.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || errno != EAGAIN) close_fd(fd);
    };
    drain(out_i, from_out, out);
    drain(err_i, from_err, err);
  }
  close_fd(to_child);
  close_fd(from_out);
  close_fd(from_err);

  int wstatus = 0;
  ::waitpid(pid, &wstatus, 0);
  if (killed) return {RunStatus::Timeout, {}, "killed after " + std::to_string(req.timeout_s) + " s"};
  if (err.size() > kStderrExcerpt) err.resize(kStderrExcerpt);
  if (WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == kExecFailed && out.empty())
    return host_failure("could not execute foreign runner " + argv_[0]);
  if (!WIFEXITED(wstatus) || WEXITSTATUS(wstatus) != 0) {
    auto r = host_failure("foreign runner exited abnormally");
    if (!err.empty()) r.stderr_text += ": " + err;
    return r;
  }
  auto nl = out.find('\n');
  RunResult r = decode_run_result(std::string_view(out).substr(0, nl));
  if (r.stderr_text.empty()) r.stderr_text = err;
  return r;
}

}  // namespace kt
