#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "item/chat.hpp"
#include "item/corpus.hpp"

namespace item {

enum class OracleMode { perfect, noisy };

// Deterministic stand-in for a hosted model. It answers purely from the
// structured marker embedded in the prompt plus the configured labels,
// judgments, and gold answers; it never reads the natural-language prompt.
//
// perfect mode:
//   - utility judgments return exactly the labeled utility passages;
//   - rankings order passages by grade descending, ties by input position;
//   - answers return the first gold answer for the qid.
// noisy mode:
//   - each utility verdict is flipped independently with flip_probability,
//     halved for passages whose id is mentioned verbatim in the supplied
//     reference answer. One uniform draw per (seed, question, passage); the
//     halving lowers the flip threshold against that same draw, so like a
//     temperature-0 judge the verdict is stable across calls and answer
//     evidence can only improve it;
//   - answers append an evidence clause naming the question's labeled-useful
//     passages. Citing starts once at least 30% of the prompt's passages are
//     useful, each candidate then named with probability min(1, 2 *
//     precision), so judged sets of higher precision produce answers whose
//     evidence reaches more of the useful passages. Evidence draws are keyed
//     by the request digest;
//   - rankings stay grade-ordered.
// Every draw is a pure function of the request and the configured OracleSpec,
// so identical requests always produce identical replies.
struct OracleSpec {
  OracleMode mode = OracleMode::perfect;
  std::vector<UtilityLabel> labels;
  std::vector<GradedJudgment> judgments;
  std::map<std::string, std::vector<std::string>> gold_answers;
  double flip_probability = 0.0;
  std::uint64_t seed = 0;
};

class OracleBackend : public ChatBackend {
 public:
  explicit OracleBackend(OracleSpec spec);

  std::string name() const override { return "oracle"; }

 private:
  ChatResponse do_chat(const ChatRequest& request) override;

  bool gold_utility(const std::string& qid, const std::string& pid) const;
  int grade_of(const std::string& qid, const std::string& pid) const;
  std::string gold_answer(const std::string& qid) const;
  // Uniform draw in [0,1) keyed by (seed, tag).
  double draw(const std::string& tag) const;

  OracleSpec spec_;
  LabelSet labels_;
  std::map<std::pair<std::string, std::string>, int> grades_;
};

}  // namespace item
