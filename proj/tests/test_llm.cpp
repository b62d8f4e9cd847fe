#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "kt/llm_client.hpp"
#include "util.hpp"

using namespace kt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Zero-shot prompt wire format.
const std::string kPlainPrompt =
    "Instructions:\n"
    "- Write a multi-line Python program. Each line should either assign a new variable or define a new function.\n"
    "- These variables and functions can be reused throughout the program.\n"
    "- Identify and utilize patterns in the input sequence to minimize the length of the program.\n"
    "- Assign the final output of the sequence to the variable output. This output will be used to verify the "
    "correctness of the program.\n"
    "- Do not include print statements or return statements.\n"
    "- Ensure that the generated code is executable in a Python interpreter without modifications.\n"
    "- Do not include the python code block syntax in your response.\n"
    "- End your response with ###.\n"
    "\n"
    "### Input Sequence:\n"
    "[5, 6]\n"
    "\n"
    "### Expected Output:\n"
    "The Python program that generates the sequence is:";

std::string chat_reply(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

// Answers every request for chunk values [v, ...] with `output = [v, ...]`,
// failing a scripted number of times first.
class MockTransport final : public Transport {
 public:
  std::map<std::string, int> fail_first;  // first value -> failures left
  int fail_status = 429;
  std::atomic<int> calls{0};
  std::mutex mu;
  std::vector<std::string> seen_auth;

  HttpResponse post(const std::string& path, const std::string& body, const Headers& headers) override {
    ++calls;
    CHECK(path == "/v1/chat/completions");
    auto j = json::parse(body);
    std::string user = j["messages"][1]["content"];
    auto from = user.find("### Input Sequence:\n") + 20;
    std::string seq = user.substr(from, user.find('\n', from) - from);
    {
      std::lock_guard lock(mu);
      for (const auto& [k, v] : headers)
        if (k == "Authorization") seen_auth.push_back(v);
      auto key = seq.substr(1, seq.find_first_of(",]") - 1);
      if (auto it = fail_first.find(key); it != fail_first.end() && it->second > 0) {
        --it->second;
        return {fail_status, "busy", ""};
      }
    }
    return {200, chat_reply("output = " + seq + "\n###"), ""};
  }
};

std::vector<Chunk> numbered_chunks(int n) {
  std::vector<Chunk> out;
  for (int i = 0; i < n; ++i) out.push_back({"c", static_cast<std::uint64_t>(i), bytes({i + 10, i}), Modality::Raw});
  return out;
}

fs::path temp_out(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kt_llm_" + name + ".jsonl");
  fs::remove(p);
  return p;
}

FetchOptions no_sleep(std::vector<double>* log = nullptr) {
  FetchOptions o;
  o.concurrency = 3;
  o.sleep = [log](std::chrono::duration<double> d) {
    if (log) log->push_back(d.count());
  };
  return o;
}

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("prompt text") {
    CHECK(render_prompt(bytes({5, 6}), PromptVariant::Plain) == kPlainPrompt);
    const auto& tpl = prompt_template(PromptVariant::Plain);
    CHECK(tpl.system ==
          "Generate a Python program that, when executed, reproduces a specified input sequence. The program should be as "
          "concise as possible.");
    CHECK(tpl.instructions.find(kSeqPlaceholder) != std::string::npos);

    std::string cot = render_prompt(bytes({5, 6}), PromptVariant::Cot);
    const std::string thought =
        "- Before the program, you can use the Thought field to generate how you think the task should be solved. "
        "After the thought, generate \"The Python program that generates the sequence is:\", followed by the program.\n";
    auto at = cot.find(thought);
    REQUIRE(at != std::string::npos);
    std::string without = cot;
    without.erase(at, thought.size() + 1);  // the highlighted bullet and its extra blank line
    CHECK(without == kPlainPrompt);
    CHECK(cot.size() > kPlainPrompt.size());
    CHECK(cot.ends_with(kProgramMarker));
    CHECK(prompt_template(PromptVariant::Cot).system == tpl.system);

    CHECK(variant_from_string("cot") == PromptVariant::Cot);
    CHECK(to_string(PromptVariant::Plain) == "plain");
    CHECK_THROWS_AS(variant_from_string("fewshot"), std::invalid_argument);
  }

  TEST_CASE("response parsing") {
    CHECK(parse_response("output = [1]\n###") == "output = [1]");
    CHECK(parse_response("```python\na = [1, 2]\noutput = a * 2\n```\n###\ntrailing chatter") == "a = [1, 2]\noutput = a * 2");
    CHECK(parse_response("  \n  output = [3]  \n") == "output = [3]");
    CHECK_THROWS_AS(parse_response("###"), ParseFailure);
    CHECK_THROWS_AS(parse_response("```\n```"), ParseFailure);
    CHECK_THROWS_AS(parse_response(""), ParseFailure);

    std::string cot = "Thought: the list counts up.\nThe Python program that generates the sequence is:\noutput = list(range(3))\n###";
    CHECK(parse_response(cot, PromptVariant::Cot) == "output = list(range(3))");
    // the marker may be echoed in the thought; the last one wins
    std::string twice = std::string(kProgramMarker) + " hmm\n" + std::string(kProgramMarker) + "\noutput = [7]";
    CHECK(parse_response(twice, PromptVariant::Cot) == "output = [7]");
    CHECK(parse_response("output = [9]\n###", PromptVariant::Cot) == "output = [9]");
  }

  TEST_CASE("request bodies and provenance") {
    EndpointConfig ep;
    ep.model = "m-test";
    ep.temperature = 0.2;
    ep.max_tokens = 77;
    auto j = json::parse(build_request_body(ep, PromptVariant::Plain, bytes({5, 6})));
    CHECK(j["model"] == "m-test");
    CHECK(j["temperature"] == 0.2);
    CHECK(j["max_tokens"] == 77);
    REQUIRE(j["messages"].size() == 2);
    CHECK(j["messages"][0]["role"] == "system");
    CHECK(j["messages"][1]["content"] == kPlainPrompt);

    CHECK(extract_content(chat_reply("hi")) == "hi");
    CHECK_THROWS_AS(extract_content("{}"), std::runtime_error);
    CHECK_THROWS_AS(extract_content("nope"), std::runtime_error);

    ::setenv("KT_TEST_KEY", "sk-secret", 1);
    ep.api_key_env = "KT_TEST_KEY";
    auto prov = provenance_of(ep, PromptVariant::Cot);
    CHECK(prov.find("sk-secret") == std::string::npos);
    CHECK(json::parse(prov)["variant"] == "cot");

    for (int s : {0, 408, 429, 500, 503}) CHECK(retryable_status(s));
    for (int s : {200, 400, 401, 404}) CHECK_FALSE(retryable_status(s));
  }

  TEST_CASE("fetch with a mock endpoint") {
    ::setenv("KT_TEST_KEY", "sk-secret", 1);
    EndpointConfig ep;
    ep.api_key_env = "KT_TEST_KEY";
    ep.backoff_initial_s = 0.5;
    ep.backoff_max_s = 1.5;
    MockTransport t;
    t.fail_first["12"] = 3;
    auto out = temp_out("mock");
    std::vector<double> sleeps;
    auto chunks = numbered_chunks(6);
    auto sum = fetch_candidates(chunks, ep, PromptVariant::Plain, t, out, no_sleep(&sleeps));
    CHECK(sum.succeeded == 6);
    CHECK(sum.retries == 3);
    CHECK(sum.requested == 9);
    CHECK(sleeps == std::vector<double>{0.5, 1.0, 1.5});
    CHECK(t.seen_auth.size() == 9);
    CHECK(t.seen_auth[0] == "Bearer sk-secret");

    auto cands = candidates_from_jsonl(read_file(out));
    REQUIRE(cands.size() == 6);
    std::set<std::size_t> seen;
    for (const auto& c : cands) {
      seen.insert(c.chunk);
      CHECK(c.source == CandidateSource::Python);
      CHECK(c.code == "output = " + format_seq(chunks[c.chunk].data));
      CHECK(c.provenance.find("sk-secret") == std::string::npos);
    }
    CHECK(seen.size() == 6);

    // everything answered: a rerun sends nothing
    int before = t.calls;
    auto again = fetch_candidates(chunks, ep, PromptVariant::Plain, t, out, no_sleep());
    CHECK(again.skipped == 6);
    CHECK(t.calls == before);
    fs::remove(out);
  }

  TEST_CASE("endpoint failures are recorded and retried on resume") {
    EndpointConfig ep;
    ep.max_retries = 1;
    MockTransport t;
    t.fail_status = 503;
    t.fail_first["11"] = 5;
    t.fail_first["13"] = 5;
    auto out = temp_out("resume");
    auto chunks = numbered_chunks(5);
    auto first = fetch_candidates(chunks, ep, PromptVariant::Plain, t, out, no_sleep());
    CHECK(first.failed == 2);
    CHECK(first.succeeded == 3);
    auto recs = candidates_from_jsonl(read_file(out));
    std::size_t broken = 0;
    for (const auto& c : recs) broken += c.non_parsing;
    CHECK(broken == 2);

    // simulate a run killed mid-write
    { std::ofstream(out, std::ios::app) << R"({"chunk": 4, "source": "py)"; }
    t.fail_first.clear();
    int before = t.calls;
    auto second = fetch_candidates(chunks, ep, PromptVariant::Plain, t, out, no_sleep());
    CHECK(second.skipped == 3);
    CHECK(second.succeeded == 2);
    CHECK(t.calls - before == 2);

    auto table = index_candidates(chunks.size(), candidates_from_jsonl(read_file(out)));
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      REQUIRE(table[i]);
      CHECK_FALSE(table[i]->non_parsing);
    }
    fs::remove(out);
  }

  TEST_CASE("non-program replies become non-parsing candidates") {
    class Silent final : public Transport {
     public:
      HttpResponse post(const std::string&, const std::string&, const Headers&) override {
        return {200, chat_reply("###"), ""};
      }
    } t;
    auto out = temp_out("silent");
    auto sum = fetch_candidates(numbered_chunks(2), EndpointConfig{}, PromptVariant::Plain, t, out, no_sleep());
    CHECK(sum.non_parsing == 2);
    for (const auto& c : candidates_from_jsonl(read_file(out))) CHECK(c.non_parsing);
    // answered, even if useless: not asked again
    CHECK(fetch_candidates(numbered_chunks(2), EndpointConfig{}, PromptVariant::Plain, t, out, no_sleep()).skipped == 2);
    fs::remove(out);
  }

  TEST_CASE("http transport against a local server") {
    httplib::Server svr;
    std::atomic<int> hits{0};
    std::string auth;
    svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      if (hits++ == 0) {
        res.status = 429;
        res.set_content("slow down", "text/plain");
        return;
      }
      auth = req.get_header_value("Authorization");
      auto j = json::parse(req.body);
      CHECK(j["model"] == "local-model");
      res.set_content(chat_reply("sequence = [1, 2]\noutput = sequence\n###"), "application/json");
    });
    int port = svr.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { svr.listen_after_bind(); });
    svr.wait_until_ready();

    ::setenv("KT_TEST_KEY", "sk-local", 1);
    EndpointConfig ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port);
    ep.model = "local-model";
    ep.api_key_env = "KT_TEST_KEY";
    ep.timeout_s = 5;
    HttplibTransport transport(ep.base_url, ep.timeout_s);
    auto out = temp_out("http");
    std::vector<Chunk> one = {{"c", 0, bytes({1, 2}), Modality::Raw}};
    auto sum = fetch_candidates(one, ep, PromptVariant::Plain, transport, out, no_sleep());
    svr.stop();
    th.join();

    CHECK(sum.retries == 1);
    CHECK(sum.succeeded == 1);
    CHECK(hits == 2);
    CHECK(auth == "Bearer sk-local");
    auto cands = candidates_from_jsonl(read_file(out));
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].code == "sequence = [1, 2]\noutput = sequence");
    fs::remove(out);

    // nothing listening
    HttplibTransport dead("http://127.0.0.1:" + std::to_string(port), 1);
    auto r = dead.post("/x", "{}", {});
    CHECK(r.status == 0);
    CHECK_FALSE(r.error.empty());
  }
}
