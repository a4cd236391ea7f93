#include "item/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "item/common.hpp"

namespace item {

SetPRF set_prf(const std::set<std::string>& predicted,
               const std::set<std::string>& gold) {
  size_t hit = 0;
  for (const auto& id : predicted) hit += gold.count(id);
  SetPRF out;
  out.precision =
      predicted.empty() ? 0.0 : static_cast<double>(hit) / predicted.size();
  out.recall = gold.empty() ? 0.0 : static_cast<double>(hit) / gold.size();
  const double pr = out.precision + out.recall;
  out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  return out;
}

namespace {

double gain_of(int grade, NdcgGain gain) {
  if (gain == NdcgGain::exponential) {
    return std::pow(2.0, static_cast<double>(grade)) - 1.0;
  }
  return static_cast<double>(grade);
}

double dcg(const std::vector<int>& grades_in_order, int k, NdcgGain gain) {
  double sum = 0.0;
  const size_t n = std::min<size_t>(grades_in_order.size(),
                                    static_cast<size_t>(k));
  for (size_t i = 0; i < n; ++i) {
    sum += gain_of(grades_in_order[i], gain) /
           std::log2(static_cast<double>(i) + 2.0);
  }
  return sum;
}

}  // namespace

double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::map<std::string, int>& grades,
                 const NdcgParams& params) {
  if (params.k < 1) throw ConfigError("ndcg cutoff k must be >= 1");
  std::vector<int> in_order;
  in_order.reserve(ranking.size());
  for (const auto& id : ranking) {
    auto it = grades.find(id);
    in_order.push_back(it == grades.end() ? 0 : it->second);
  }
  std::vector<int> ideal = in_order;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  const double idcg = dcg(ideal, params.k, params.gain);
  if (idcg <= 0.0) return 0.0;
  return dcg(in_order, params.k, params.gain) / idcg;
}

std::string normalize_answer(std::string_view s) {
  static const std::string punct = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
  std::string lowered = lower_ascii(s);
  std::string stripped;
  stripped.reserve(lowered.size());
  for (char c : lowered) {
    if (punct.find(c) == std::string::npos) stripped.push_back(c);
  }
  std::string out;
  for (const auto& tok : split_whitespace(stripped)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw ConfigError("exact_match requires at least one gold answer");
  const std::string np = normalize_answer(pred);
  for (const auto& g : golds) {
    if (np == normalize_answer(g)) return 1;
  }
  return 0;
}

double token_f1(std::string_view pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw ConfigError("token_f1 requires at least one gold answer");
  const auto pred_tokens = split_whitespace(normalize_answer(pred));
  std::map<std::string, int> pred_counts;
  for (const auto& t : pred_tokens) ++pred_counts[t];

  double best = 0.0;
  for (const auto& g : golds) {
    const auto gold_tokens = split_whitespace(normalize_answer(g));
    if (pred_tokens.empty() || gold_tokens.empty()) {
      best = std::max(best, pred_tokens.empty() && gold_tokens.empty() ? 1.0 : 0.0);
      continue;
    }
    std::map<std::string, int> gold_counts;
    for (const auto& t : gold_tokens) ++gold_counts[t];
    int overlap = 0;
    for (const auto& [tok, cnt] : pred_counts) {
      auto it = gold_counts.find(tok);
      if (it != gold_counts.end()) overlap += std::min(cnt, it->second);
    }
    if (overlap == 0) continue;
    const double p = static_cast<double>(overlap) / pred_tokens.size();
    const double r = static_cast<double>(overlap) / gold_tokens.size();
    best = std::max(best, 2.0 * p * r / (p + r));
  }
  return best;
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = split_whitespace(lower_ascii(candidate));
  const auto ref = split_whitespace(lower_ascii(reference));
  if (cand.empty() || ref.empty()) return 0.0;

  // LCS length with a rolling row.
  std::vector<int> prev(ref.size() + 1, 0);
  std::vector<int> cur(ref.size() + 1, 0);
  for (size_t i = 1; i <= cand.size(); ++i) {
    for (size_t j = 1; j <= ref.size(); ++j) {
      if (cand[i - 1] == ref[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const int lcs = prev[ref.size()];
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / cand.size();
  const double r = static_cast<double>(lcs) / ref.size();
  return 2.0 * p * r / (p + r);
}

}  // namespace item
