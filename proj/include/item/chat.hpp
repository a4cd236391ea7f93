#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace item {

enum class Role { system, user, assistant };

std::string role_to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string text;
  bool cached = false;
  int latency_ms = 0;
  std::string backend;
};

// OpenAI-style chat completion body.
nlohmann::json request_to_json(const ChatRequest& request);

// SHA-256 over the canonical JSON of (model, temperature, messages). Stable
// across runs and platforms.
std::string cache_key(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  ChatResponse chat(const ChatRequest& request) {
    ++calls_;
    return do_chat(request);
  }

  virtual std::string name() const = 0;
  std::uint64_t call_count() const { return calls_.load(); }

 private:
  virtual ChatResponse do_chat(const ChatRequest& request) = 0;

  std::atomic<std::uint64_t> calls_{0};
};

// Append-only line-delimited record store `{key, text, model, timestamp}`;
// the last record for a key wins. Corrupt lines are skipped with a warning
// count; write failures degrade to uncached operation.
class ChatCache {
 public:
  explicit ChatCache(std::string path);

  std::optional<std::string> lookup(const std::string& key) const;
  void append(const std::string& key, const std::string& text,
              const std::string& model);

  const std::string& path() const { return path_; }
  size_t size() const;
  size_t corrupt_lines() const { return corrupt_lines_; }
  size_t io_warnings() const { return io_warnings_.load(); }

 private:
  std::string path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mu_;
  size_t corrupt_lines_ = 0;
  std::atomic<size_t> io_warnings_{0};
};

// Cache hit returns the stored text without touching the backend; a miss
// goes through the backend and appends. `cache` may be null.
ChatResponse cached_chat(ChatBackend& backend, ChatCache* cache,
                         const ChatRequest& request);

struct RetryPolicy {
  int max_attempts = 5;
  int base_delay_ms = 1000;
  double factor = 2.0;
  std::uint64_t seed = 0;
};

struct HttpBackendConfig {
  std::string base_url;                        // e.g. http://localhost:8080
  std::string path = "/v1/chat/completions";
  std::string api_key;                         // empty = no Authorization header
  RetryPolicy retry;
  int max_in_flight = 4;
  int timeout_seconds = 120;
};

// OpenAI-compatible HTTP backend. Retries 429 and 5xx responses with full
// jitter exponential backoff; metadata markers are stripped before the
// request goes on the wire.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string name() const override { return "http"; }

  struct Stats {
    std::uint64_t attempts = 0;
    std::uint64_t retries = 0;
  };
  Stats stats() const;

 private:
  ChatResponse do_chat(const ChatRequest& request) override;
  int next_delay_ms(int attempt);

  HttpBackendConfig config_;
  std::counting_semaphore<4096> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  std::atomic<std::uint64_t> attempts_{0};
  std::atomic<std::uint64_t> retries_{0};
};

}  // namespace item
