#pragma once

#include <string>
#include <vector>

namespace item {

enum class UtilitySource { judged, topk_of_ranking, aggregated };

std::string utility_source_to_string(UtilitySource source);

struct UtilitySet {
  std::string qid;
  std::vector<std::string> passage_ids;  // sorted, unique
  UtilitySource source = UtilitySource::judged;
};

struct Ranking {
  std::string qid;
  std::vector<std::string> order;  // complete permutation of candidate ids
};

enum class AnswerKind { explicit_answer, implicit_answer };

struct PseudoAnswer {
  std::string qid;
  std::string text;
  AnswerKind kind = AnswerKind::explicit_answer;
  int iteration = 1;
};

// Pulls `Passage-<n>` and `[n]` identifiers out of a reply and maps the
// 1-based positions onto candidate ids. Out-of-range positions are dropped,
// duplicates keep the first mention, and a literal `Utility: none` yields the
// empty set. A reply with neither ids nor `none` is a parse error.
UtilitySet parse_utility_set(const std::string& reply,
                             const std::vector<std::string>& candidate_ids,
                             const std::string& qid);

// Bracketed identifiers in order of appearance; out-of-range dropped,
// duplicates keep the first mention, and missing candidates are appended at
// the tail in their original input order. Zero identifiers is a parse error.
Ranking parse_ranking(const std::string& reply,
                      const std::vector<std::string>& candidate_ids_in_input_order,
                      const std::string& qid);

struct PointwiseVerdict {
  bool value = false;
  bool ambiguous = false;  // neither yes nor no led the first line
};

PointwiseVerdict parse_pointwise_verdict(const std::string& reply);

}  // namespace item
