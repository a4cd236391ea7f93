#include "item/chat.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "item/common.hpp"
#include "item/prompting.hpp"

namespace item {

std::string role_to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

nlohmann::json request_to_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", role_to_string(m.role)}, {"content", m.content}});
  }
  return nlohmann::json{{"model", request.model},
                        {"messages", std::move(messages)},
                        {"temperature", request.temperature}};
}

std::string cache_key(const ChatRequest& request) {
  return sha256_hex(request_to_json(request).dump());
}

ChatCache::ChatCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // created on first write
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") ||
        !j.contains("text")) {
      ++corrupt_lines_;
      continue;
    }
    entries_[j["key"].get<std::string>()] = j["text"].get<std::string>();
  }
}

std::optional<std::string> ChatCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ChatCache::append(const std::string& key, const std::string& text,
                       const std::string& model) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_[key] = text;
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    ++io_warnings_;
    return;
  }
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  nlohmann::json rec{{"key", key}, {"text", text}, {"model", model},
                     {"timestamp", now}};
  out << rec.dump() << '\n';
  if (!out) ++io_warnings_;
}

size_t ChatCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

ChatResponse cached_chat(ChatBackend& backend, ChatCache* cache,
                         const ChatRequest& request) {
  const std::string key = cache_key(request);
  if (cache != nullptr) {
    if (auto hit = cache->lookup(key)) {
      return {*hit, true, 0, backend.name()};
    }
  }
  ChatResponse response = backend.chat(request);
  if (cache != nullptr) cache->append(key, response.text, request.model);
  return response;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)),
      slots_(std::max(1, config_.max_in_flight)),
      rng_(config_.retry.seed) {}

HttpBackend::Stats HttpBackend::stats() const {
  return {attempts_.load(), retries_.load()};
}

int HttpBackend::next_delay_ms(int attempt) {
  const double cap = config_.retry.base_delay_ms *
                     std::pow(config_.retry.factor, attempt - 1);
  std::lock_guard<std::mutex> lock(rng_mu_);
  return static_cast<int>(unit_real(rng_()) * cap);
}

ChatResponse HttpBackend::do_chat(const ChatRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{slots_};

  ChatRequest wire = request;
  for (auto& m : wire.messages) m.content = strip_markers(m.content);
  const std::string body = request_to_json(wire).dump();
  const std::string digest = cache_key(request);

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const auto start = std::chrono::steady_clock::now();
  std::string last_failure;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    ++attempts_;
    auto res = client.Post(config_.path, headers, body, "application/json");
    const bool retriable =
        !res || res->status == 429 || res->status >= 500;
    if (res && res->status == 200) {
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
          !j["choices"][0].contains("message") ||
          !j["choices"][0]["message"].contains("content")) {
        throw ProtocolError("malformed chat completion response", digest);
      }
      ChatResponse out;
      out.text = j["choices"][0]["message"]["content"].get<std::string>();
      out.backend = name();
      out.latency_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - start)
              .count());
      return out;
    }
    if (!retriable) {
      throw TransportError(
          "chat completion failed with status " + std::to_string(res->status),
          digest);
    }
    last_failure = res ? "status " + std::to_string(res->status)
                       : "connection failure";
    if (attempt < config_.retry.max_attempts) {
      ++retries_;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(next_delay_ms(attempt)));
    }
  }
  throw TransportError("chat completion retries exhausted (" + last_failure + ")",
                       digest);
}

}  // namespace item
