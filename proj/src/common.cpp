#include "item/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>

namespace item {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
             nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

std::uint64_t stable_hash64(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
             nullptr);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<size_t>(i)];
  return v;
}

double unit_real(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * (1.0 / 9007199254740992.0);
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool contains_token(std::string_view text, std::string_view needle) {
  if (needle.empty()) return false;
  auto is_delim = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ',' ||
           c == '.' || c == ';' || c == ':' || c == '(' || c == ')' ||
           c == '[' || c == ']' || c == '{' || c == '}' || c == '"' ||
           c == '\'';
  };
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || is_delim(text[pos - 1]);
    const size_t end = pos + needle.size();
    const bool right_ok = end == text.size() || is_delim(text[end]);
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

}  // namespace item
