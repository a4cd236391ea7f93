#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace item {

struct SetPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// P and R over id sets; empty prediction or empty gold scores 0 on that side.
SetPRF set_prf(const std::set<std::string>& predicted,
               const std::set<std::string>& gold);

enum class NdcgGain { linear, exponential };

struct NdcgParams {
  int k = 5;
  NdcgGain gain = NdcgGain::linear;
};

// Ideal DCG is taken over permutations of the given ranking itself; ids
// missing from `grades` count as grade 0. All-zero grades score 0.
double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::map<std::string, int>& grades,
                 const NdcgParams& params = {});

// Lowercase, strip punctuation characters, drop article tokens (a, an, the),
// collapse whitespace.
std::string normalize_answer(std::string_view s);

int exact_match(std::string_view pred, const std::vector<std::string>& golds);

// Token-multiset F1 after normalization; best score over all golds.
double token_f1(std::string_view pred, const std::vector<std::string>& golds);

// LCS-based F measure (beta = 1) over lowercased whitespace tokens.
double rouge_l(std::string_view candidate, std::string_view reference);

}  // namespace item
