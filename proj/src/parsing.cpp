#include "item/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "item/common.hpp"

namespace item {

std::string utility_source_to_string(UtilitySource source) {
  switch (source) {
    case UtilitySource::judged: return "judged";
    case UtilitySource::topk_of_ranking: return "topk_of_ranking";
    case UtilitySource::aggregated: return "aggregated";
  }
  return "judged";
}

namespace {

// 1-based positions of `Passage-<n>` (accept_labels) and `[n]` tokens, in
// order of appearance.
std::vector<int> extract_positions(const std::string& reply,
                                   bool accept_labels) {
  std::vector<int> out;
  for (size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] == '[') {
      size_t j = i + 1;
      size_t digits = 0;
      int value = 0;
      while (j < reply.size() &&
             std::isdigit(static_cast<unsigned char>(reply[j]))) {
        value = value * 10 + (reply[j] - '0');
        ++j;
        ++digits;
      }
      if (digits > 0 && j < reply.size() && reply[j] == ']') {
        out.push_back(value);
        i = j;
      }
      continue;
    }
    if (accept_labels &&
        (reply[i] == 'p' || reply[i] == 'P')) {
      const std::string_view rest(reply.data() + i, reply.size() - i);
      const std::string lowered = lower_ascii(rest.substr(0, 8));
      if (lowered.rfind("passage-", 0) == 0) {
        size_t j = i + 8;
        size_t digits = 0;
        int value = 0;
        while (j < reply.size() &&
               std::isdigit(static_cast<unsigned char>(reply[j]))) {
          value = value * 10 + (reply[j] - '0');
          ++j;
          ++digits;
        }
        if (digits > 0) {
          out.push_back(value);
          i = j - 1;
        }
      }
    }
  }
  return out;
}

bool declares_none(const std::string& reply) {
  const std::string lowered = lower_ascii(reply);
  size_t pos = lowered.find("utility:");
  while (pos != std::string::npos) {
    size_t j = pos + 8;
    while (j < lowered.size() &&
           std::isspace(static_cast<unsigned char>(lowered[j]))) {
      ++j;
    }
    if (lowered.compare(j, 4, "none") == 0) return true;
    pos = lowered.find("utility:", pos + 1);
  }
  return false;
}

}  // namespace

UtilitySet parse_utility_set(const std::string& reply,
                             const std::vector<std::string>& candidate_ids,
                             const std::string& qid) {
  if (candidate_ids.empty()) {
    throw ConfigError("parse_utility_set needs a non-empty candidate list");
  }
  UtilitySet out;
  out.qid = qid;
  out.source = UtilitySource::judged;

  const auto positions = extract_positions(reply, /*accept_labels=*/true);
  if (positions.empty()) {
    if (declares_none(reply)) return out;
    throw ReplyParseError("no passage identifiers in utility reply", reply);
  }
  std::set<int> seen;
  for (int pos : positions) {
    if (pos < 1 || pos > static_cast<int>(candidate_ids.size())) continue;
    if (!seen.insert(pos).second) continue;
    out.passage_ids.push_back(candidate_ids[static_cast<size_t>(pos) - 1]);
  }
  std::sort(out.passage_ids.begin(), out.passage_ids.end());
  return out;
}

Ranking parse_ranking(const std::string& reply,
                      const std::vector<std::string>& candidate_ids_in_input_order,
                      const std::string& qid) {
  if (candidate_ids_in_input_order.empty()) {
    throw ConfigError("parse_ranking needs a non-empty candidate list");
  }
  const auto positions = extract_positions(reply, /*accept_labels=*/false);
  if (positions.empty()) {
    throw ReplyParseError("no identifiers in ranking reply", reply);
  }
  Ranking out;
  out.qid = qid;
  std::set<int> seen;
  for (int pos : positions) {
    if (pos < 1 ||
        pos > static_cast<int>(candidate_ids_in_input_order.size())) {
      continue;
    }
    if (!seen.insert(pos).second) continue;
    out.order.push_back(
        candidate_ids_in_input_order[static_cast<size_t>(pos) - 1]);
  }
  for (size_t i = 0; i < candidate_ids_in_input_order.size(); ++i) {
    if (seen.count(static_cast<int>(i) + 1) == 0) {
      out.order.push_back(candidate_ids_in_input_order[i]);
    }
  }
  return out;
}

PointwiseVerdict parse_pointwise_verdict(const std::string& reply) {
  std::string first_line = reply.substr(0, reply.find('\n'));
  first_line = lower_ascii(trim(first_line));
  if (first_line.rfind("yes", 0) == 0) return {true, false};
  if (first_line.rfind("no", 0) == 0) return {false, false};
  return {false, true};
}

}  // namespace item
