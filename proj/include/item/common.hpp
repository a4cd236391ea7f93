#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace item {

// Configuration / CLI validation failures. Exit code 2 territory.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (corpus files, qrels, run files).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Network-level failure after retries were exhausted.
struct TransportError : std::runtime_error {
  TransportError(const std::string& what, std::string digest)
      : std::runtime_error(what), request_digest(std::move(digest)) {}
  std::string request_digest;
};

// Response arrived but did not match the expected wire shape.
struct ProtocolError : std::runtime_error {
  ProtocolError(const std::string& what, std::string digest)
      : std::runtime_error(what), request_digest(std::move(digest)) {}
  std::string request_digest;
};

// A model reply that could not be decoded into the expected structure.
struct ReplyParseError : std::runtime_error {
  ReplyParseError(const std::string& what, std::string reply)
      : std::runtime_error(what), raw_reply(std::move(reply)) {}
  std::string raw_reply;
};

std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256, big-endian. Stable across platforms.
std::uint64_t stable_hash64(std::string_view data);

// Maps a raw 64-bit engine draw onto [0, 1) using the top 53 bits.
double unit_real(std::uint64_t raw);

std::string lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Whole-token occurrence check: `needle` must appear in `text` delimited by
// whitespace or punctuation. Used for id mentions in free text.
bool contains_token(std::string_view text, std::string_view needle);

}  // namespace item
