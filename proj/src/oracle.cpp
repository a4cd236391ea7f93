#include "item/oracle.hpp"

#include <algorithm>
#include <sstream>

#include "item/common.hpp"
#include "item/prompting.hpp"

namespace item {

OracleBackend::OracleBackend(OracleSpec spec)
    : spec_(std::move(spec)), labels_(spec_.labels) {
  for (const auto& j : spec_.judgments) {
    grades_[{j.qid, j.passage_id}] = j.grade;
  }
}

bool OracleBackend::gold_utility(const std::string& qid,
                                 const std::string& pid) const {
  return labels_.has_utility(qid, pid);
}

int OracleBackend::grade_of(const std::string& qid,
                            const std::string& pid) const {
  auto it = grades_.find({qid, pid});
  if (it != grades_.end()) return it->second;
  return gold_utility(qid, pid) ? 1 : 0;
}

std::string OracleBackend::gold_answer(const std::string& qid) const {
  auto it = spec_.gold_answers.find(qid);
  if (it != spec_.gold_answers.end() && !it->second.empty()) {
    return it->second.front();
  }
  return "Insufficient information.";
}

double OracleBackend::draw(const std::string& tag) const {
  const std::uint64_t seed =
      stable_hash64(std::to_string(spec_.seed) + "|" + tag);
  std::mt19937_64 rng(seed);
  return unit_real(rng());
}

ChatResponse OracleBackend::do_chat(const ChatRequest& request) {
  const std::string digest = cache_key(request);
  const auto marker = extract_marker(request);
  if (!marker) {
    throw ProtocolError("oracle backend needs an embedded metadata marker",
                        digest);
  }
  const std::string& qid = marker->qid;
  const auto& pids = marker->pids;
  std::string reply;

  if (marker->kind == "utility_listwise" ||
      marker->kind == "utility_pointwise") {
    std::vector<size_t> chosen;
    for (size_t i = 0; i < pids.size(); ++i) {
      bool verdict = gold_utility(qid, pids[i]);
      if (spec_.mode == OracleMode::noisy) {
        double flip = spec_.flip_probability;
        const bool supported =
            marker->answer && contains_token(*marker->answer, pids[i]);
        if (supported) flip *= 0.5;
        // One draw per (question, passage); support halves the threshold
        // against that same draw, so evidence never degrades a verdict.
        if (draw("judge|" + qid + "|" + pids[i]) < flip) verdict = !verdict;
      }
      if (verdict) chosen.push_back(i);
    }
    if (marker->kind == "utility_pointwise") {
      reply = chosen.empty() ? "No" : "Yes";
    } else if (chosen.empty()) {
      reply = "Utility: none";
    } else {
      std::ostringstream os;
      os << "Utility: ";
      for (size_t i = 0; i < chosen.size(); ++i) {
        if (i > 0) os << ", ";
        os << "Passage-" << chosen[i] + 1;
      }
      reply = os.str();
    }
  } else if (marker->kind == "rank_relevance" ||
             marker->kind == "rank_utility" ||
             marker->kind == "rank_rankgpt_baseline") {
    std::vector<size_t> order(pids.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return grade_of(qid, pids[a]) > grade_of(qid, pids[b]);
    });
    std::ostringstream os;
    for (size_t i = 0; i < order.size(); ++i) {
      if (i > 0) os << " > ";
      os << '[' << order[i] + 1 << ']';
    }
    reply = os.str();
  } else if (marker->kind == "answer_explicit" ||
             marker->kind == "answer_implicit") {
    reply = gold_answer(qid);
    if (spec_.mode == OracleMode::noisy && !pids.empty()) {
      size_t useful = 0;
      for (const auto& pid : pids) useful += gold_utility(qid, pid) ? 1 : 0;
      const double precision =
          static_cast<double>(useful) / static_cast<double>(pids.size());
      // Diluted prompts yield uncited answers; citing starts once at least
      // 30% of the prompt's passages are useful. Cited evidence comes from
      // the question's labeled-useful pool (a correct answer is contained in
      // every useful passage, found or not yet found).
      const double mention_p =
          precision < 0.3 ? 0.0 : std::min(1.0, 2.0 * precision);
      std::vector<std::string> mentioned;
      if (mention_p > 0.0) {
        for (const auto& label : labels_.utility_passages(qid)) {
          if (draw("mention|" + digest + "|" + label.passage_id) < mention_p) {
            mentioned.push_back(label.passage_id);
          }
        }
      }
      if (!mentioned.empty()) {
        std::ostringstream os;
        os << reply << " Evidence: ";
        for (size_t i = 0; i < mentioned.size(); ++i) {
          if (i > 0) os << ", ";
          os << mentioned[i];
        }
        os << '.';
        reply = os.str();
      }
    }
  } else {
    throw ProtocolError("oracle backend cannot handle prompt kind `" +
                            marker->kind + "`",
                        digest);
  }

  ChatResponse out;
  out.text = reply;
  out.backend = name();
  out.latency_ms = 0;  // keeps traces reproducible
  return out;
}

}  // namespace item
