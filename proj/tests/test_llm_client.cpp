#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "item/chat.hpp"
#include "item/common.hpp"
#include "item/oracle.hpp"
#include "item/prompting.hpp"

using namespace item;

namespace {

ChatRequest simple_request(const std::string& content) {
  return {"test-model", {{Role::user, content}}, 0.0};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("cache_key is stable and collision-resistant at test scale") {
  const auto a = cache_key(simple_request("hello"));
  CHECK(a == cache_key(simple_request("hello")));
  CHECK(a != cache_key(simple_request("hellp")));
  ChatRequest other = simple_request("hello");
  other.model = "another-model";
  CHECK(a != cache_key(other));
  ChatRequest warm = simple_request("hello");
  warm.temperature = 0.7;
  CHECK(a != cache_key(warm));
  CHECK(a.size() == 64);
}

TEST_CASE("request_to_json carries the wire shape") {
  ChatRequest request{"m",
                      {{Role::system, "s"}, {Role::user, "u"}},
                      0.0};
  const auto j = request_to_json(request);
  CHECK(j["model"] == "m");
  CHECK(j["temperature"] == 0.0);
  REQUIRE(j["messages"].size() == 2);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][1]["content"] == "u");
}

TEST_CASE("cache: miss then hit with equal text") {
  const std::string path = temp_path("cache_basic.jsonl");
  std::remove(path.c_str());
  OracleSpec spec;
  spec.gold_answers["q1"] = {"forty-two"};
  OracleBackend backend(spec);

  PromptMarker marker{"answer_explicit", "q1", {}, std::nullopt};
  const auto request = simple_request("question\n" + marker_block(marker));

  ChatCache cache(path);
  const auto first = cached_chat(backend, &cache, request);
  CHECK_FALSE(first.cached);
  CHECK(first.text == "forty-two");
  const auto second = cached_chat(backend, &cache, request);
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(backend.call_count() == 1);

  // A fresh cache object replays from the file: zero backend calls.
  ChatCache reloaded(path);
  OracleBackend cold(spec);
  const auto third = cached_chat(cold, &reloaded, request);
  CHECK(third.cached);
  CHECK(cold.call_count() == 0);
  std::remove(path.c_str());
}

TEST_CASE("cache file is created on first write and tolerates corrupt lines") {
  const std::string path = temp_path("cache_corrupt.jsonl");
  std::remove(path.c_str());
  {
    ChatCache cache(path);
    CHECK(cache.size() == 0);
    cache.append("k1", "v1", "m");
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "this is not json\n";
    out << R"({"key":"k2","text":"v2","model":"m","timestamp":0})" << "\n";
    out << R"({"key":"k1","text":"v1-newer","model":"m","timestamp":1})" << "\n";
  }
  ChatCache cache(path);
  CHECK(cache.corrupt_lines() == 1);
  CHECK(cache.size() == 2);
  CHECK(cache.lookup("k2") == std::string("v2"));
  // Last record for a key wins.
  CHECK(cache.lookup("k1") == std::string("v1-newer"));
  std::remove(path.c_str());
}

TEST_CASE("cache write failure degrades to uncached operation") {
  ChatCache cache("/nonexistent-dir/cache.jsonl");
  cache.append("k", "v", "m");
  CHECK(cache.io_warnings() == 1);
  // The in-memory entry still serves this process.
  CHECK(cache.lookup("k") == std::string("v"));
}

TEST_CASE("http backend retries 429 then succeeds, stripping markers") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_body;
  std::string seen_auth;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                const int n = ++hits;
                if (n <= 2) {
                  res.status = 429;
                  return;
                }
                seen_body = req.body;
                seen_auth = req.get_header_value("Authorization");
                nlohmann::json reply = {
                    {"choices",
                     {{{"message", {{"role", "assistant"},
                                    {"content", "hello there"}}}}}}};
                res.set_content(reply.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.api_key = "sk-test";
  config.retry = {5, 1, 2.0, 7};
  HttpBackend backend(config);

  PromptMarker marker{"utility_listwise", "q1", {"p1"}, std::nullopt};
  const auto request =
      simple_request("visible text\n" + marker_block(marker));
  const auto response = backend.chat(request);
  CHECK(response.text == "hello there");
  CHECK_FALSE(response.cached);
  CHECK(response.backend == "http");
  CHECK(hits.load() == 3);
  CHECK(backend.stats().attempts == 3);
  CHECK(backend.stats().retries == 2);
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_body.find("visible text") != std::string::npos);
  CHECK(seen_body.find("meta") == std::string::npos);
  CHECK(seen_body.find("q1") == std::string::npos);

  server.stop();
  listener.join();
}

TEST_CASE("http backend surfaces transport and protocol errors with the digest") {
  httplib::Server server;
  std::atomic<int> mode{0};  // 0: always 500, 1: bad json, 2: 401
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                if (mode == 0) {
                  res.status = 500;
                } else if (mode == 1) {
                  res.set_content("{\"nonsense\":true}", "application/json");
                } else {
                  res.status = 401;
                }
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.retry = {3, 1, 2.0, 7};

  const auto request = simple_request("x");
  const std::string digest = cache_key(request);
  {
    HttpBackend backend(config);
    try {
      backend.chat(request);
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(e.request_digest == digest);
      CHECK(backend.stats().attempts == 3);
    }
  }
  mode = 1;
  {
    HttpBackend backend(config);
    CHECK_THROWS_AS(backend.chat(request), ProtocolError);
  }
  mode = 2;
  {
    HttpBackend backend(config);
    try {
      backend.chat(request);
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(backend.stats().attempts == 1);  // 4xx is not retried
    }
  }
  server.stop();
  listener.join();
}

namespace {

OracleSpec five_passage_oracle() {
  OracleSpec spec;
  for (int i = 1; i <= 5; ++i) {
    const std::string pid = "p" + std::to_string(i);
    spec.labels.push_back({"q1", pid, pid == "p2" || pid == "p4", 0});
  }
  spec.judgments = {{"q1", "p1", 0}, {"q1", "p2", 3}, {"q1", "p3", 1},
                    {"q1", "p4", 3}, {"q1", "p5", 2}};
  spec.gold_answers["q1"] = {"the gold answer"};
  return spec;
}

ChatRequest marker_request(const PromptMarker& marker) {
  return {"m", {{Role::user, "prompt\n" + marker_block(marker)}}, 0.0};
}

}  // namespace

TEST_CASE("perfect oracle enumerates exactly the labeled utility passages") {
  OracleBackend backend(five_passage_oracle());
  PromptMarker marker{"utility_listwise", "q1",
                      {"p1", "p2", "p3", "p4", "p5"}, std::nullopt};
  const auto response = backend.chat(marker_request(marker));
  CHECK(response.text == "Utility: Passage-2, Passage-4");
  CHECK(response.backend == "oracle");
  CHECK(response.latency_ms == 0);
}

TEST_CASE("perfect oracle ranks by grade descending, ties by input position") {
  OracleBackend backend(five_passage_oracle());
  PromptMarker marker{"rank_relevance", "q1",
                      {"p1", "p2", "p3", "p4", "p5"}, std::nullopt};
  const auto response = backend.chat(marker_request(marker));
  // grades: p2=3, p4=3 (tie by position), p5=2, p3=1, p1=0
  CHECK(response.text == "[2] > [4] > [5] > [3] > [1]");
}

TEST_CASE("perfect oracle pointwise and empty-utility replies") {
  OracleBackend backend(five_passage_oracle());
  PromptMarker yes{"utility_pointwise", "q1", {"p2"}, std::nullopt};
  CHECK(backend.chat(marker_request(yes)).text == "Yes");
  PromptMarker no{"utility_pointwise", "q1", {"p1"}, std::nullopt};
  CHECK(backend.chat(marker_request(no)).text == "No");
  PromptMarker none{"utility_listwise", "q1", {"p1", "p3"}, std::nullopt};
  CHECK(backend.chat(marker_request(none)).text == "Utility: none");
}

TEST_CASE("oracle without a marker is a protocol error") {
  OracleBackend backend(five_passage_oracle());
  CHECK_THROWS_AS(backend.chat(simple_request("no marker")), ProtocolError);
}

TEST_CASE("oracle is deterministic: same spec and request, identical replies") {
  auto spec = five_passage_oracle();
  spec.mode = OracleMode::noisy;
  spec.flip_probability = 0.4;
  spec.seed = 123;
  OracleBackend a(spec);
  OracleBackend b(spec);
  for (int i = 0; i < 20; ++i) {
    PromptMarker marker{"utility_listwise", "q1",
                        {"p1", "p2", "p3", "p4", "p5"},
                        "answer variant " + std::to_string(i)};
    const auto request = marker_request(marker);
    CHECK(a.chat(request).text == b.chat(request).text);
  }
}

TEST_CASE("noisy oracle flip rate converges to flip_probability") {
  // Verdict draws are keyed per (question, passage), so 10,000 independent
  // judgments need 10,000 distinct pairs.
  OracleSpec spec;
  spec.mode = OracleMode::noisy;
  spec.flip_probability = 0.2;
  spec.seed = 2024;
  std::vector<std::vector<std::string>> batches;
  for (int r = 0; r < 10; ++r) {
    std::vector<std::string> pids;
    for (int i = 0; i < 1000; ++i) {
      const std::string pid = "p" + std::to_string(r) + "_" + std::to_string(i);
      pids.push_back(pid);
      spec.labels.push_back({"q" + std::to_string(r), pid, false, 0});
    }
    batches.push_back(std::move(pids));
  }
  OracleBackend backend(spec);

  int flips = 0;
  int total = 0;
  for (int r = 0; r < 10; ++r) {
    PromptMarker marker{"utility_listwise", "q" + std::to_string(r),
                        batches[static_cast<size_t>(r)], std::nullopt};
    const auto response = backend.chat(marker_request(marker));
    // Gold has no utility anywhere, so every listed passage is a flip.
    for (size_t pos = response.text.find("Passage-");
         pos != std::string::npos;
         pos = response.text.find("Passage-", pos + 1)) {
      ++flips;
    }
    total += 1000;
  }
  CHECK(total == 10000);
  const double rate = static_cast<double>(flips) / total;
  CHECK(rate > 0.18);
  CHECK(rate < 0.22);
}

TEST_CASE("mention in the reference answer halves the flip probability") {
  OracleSpec spec;
  spec.mode = OracleMode::noisy;
  spec.flip_probability = 1.0;
  spec.seed = 5;
  std::vector<std::string> pids;
  for (int i = 0; i < 400; ++i) {
    const std::string pid = "t" + std::to_string(i);
    pids.push_back(pid);
    spec.labels.push_back({"q", pid, false, 0});
  }
  OracleBackend backend(spec);

  int flips_mentioned = 0;
  int flips_unmentioned = 0;
  for (const auto& pid : pids) {
    PromptMarker mentioned{"utility_pointwise", "q", {pid}, "see " + pid};
    if (backend.chat(marker_request(mentioned)).text == "Yes") {
      ++flips_mentioned;
    }
    PromptMarker unmentioned{"utility_pointwise", "q", {pid}, "nothing here"};
    if (backend.chat(marker_request(unmentioned)).text == "Yes") {
      ++flips_unmentioned;
    }
  }
  CHECK(flips_unmentioned == 400);  // flip probability 1.0
  CHECK(flips_mentioned > 160);     // halved to 0.5
  CHECK(flips_mentioned < 240);
}

TEST_CASE("noisy oracle cites only labeled-useful passages of the question") {
  auto spec = five_passage_oracle();
  spec.mode = OracleMode::noisy;
  spec.flip_probability = 0.3;
  spec.seed = 9;
  OracleBackend backend(spec);
  // Precision 2/3: citing active, full strength. Gold is {p2, p4}.
  PromptMarker marker{"answer_explicit", "q1", {"p2", "p4", "p1"}, std::nullopt};
  const auto response = backend.chat(marker_request(marker));
  CHECK(response.text.rfind("the gold answer", 0) == 0);
  REQUIRE(response.text.find("Evidence:") != std::string::npos);
  CHECK(response.text.find("p2") != std::string::npos);
  CHECK(response.text.find("p4") != std::string::npos);
  CHECK(response.text.find("p1") == std::string::npos);
  CHECK(response.text.find("p3") == std::string::npos);

  // Evidence may reach useful passages beyond the prompt's list.
  PromptMarker partial{"answer_explicit", "q1", {"p2", "p1"}, std::nullopt};
  const auto partial_response = backend.chat(marker_request(partial));
  CHECK(partial_response.text.find("p4") != std::string::npos);

  // A diluted prompt (1 useful of 4 < 30%) stays uncited.
  PromptMarker diluted{"answer_explicit", "q1",
                       {"p2", "p1", "p3", "p5"}, std::nullopt};
  CHECK(backend.chat(marker_request(diluted)).text == "the gold answer");
}
