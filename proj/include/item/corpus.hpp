#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace item {

struct Passage {
  std::string id;
  std::string text;
  std::string title;  // optional, empty when absent
};

struct Question {
  std::string qid;
  std::string text;
  std::vector<std::string> gold_answers;  // empty for retrieval-only datasets
};

struct GradedJudgment {
  std::string qid;
  std::string passage_id;
  int grade = 0;
};

struct UtilityLabel {
  std::string qid;
  std::string passage_id;
  bool has_utility = false;
  int grade = 0;  // provenance of the derivation, used for injection tie-breaks
};

struct CandidateEntry {
  std::string passage_id;
  double retriever_score = 0.0;
  bool injected = false;
};

// The ordered list presented to the model, in presentation order.
struct CandidateList {
  std::string qid;
  std::vector<CandidateEntry> entries;

  std::vector<std::string> ids() const;
};

enum class PassageFormat { tsv, jsonl };

// TSV rows are `id<TAB>text`; JSONL objects carry id, text, optional title.
std::vector<Passage> load_passages(const std::string& path, PassageFormat format);

// Keyed passage lookup built on top of a loaded collection.
class PassageStore {
 public:
  PassageStore() = default;
  explicit PassageStore(std::vector<Passage> passages);

  const Passage* find(const std::string& id) const;
  const Passage& at(const std::string& id) const;
  const std::vector<Passage>& all() const { return passages_; }
  size_t size() const { return passages_.size(); }

 private:
  std::vector<Passage> passages_;
  std::map<std::string, size_t> by_id_;
};

// TREC qrels: `qid 0 pid grade`. Word grades are accepted when grade_map is
// given (e.g. perfect/excel/good/fair scales).
std::vector<GradedJudgment> load_qrels(
    const std::string& path, int g_max = 3,
    const std::map<std::string, int>* grade_map = nullptr);

void save_qrels(const std::string& path,
                const std::vector<GradedJudgment>& judgments);

std::vector<UtilityLabel> derive_utility_labels(
    const std::vector<GradedJudgment>& judgments, int utility_grade = 3);

// Per-qid lookup over labels.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(const std::vector<UtilityLabel>& labels);

  bool has_utility(const std::string& qid, const std::string& pid) const;
  // Utility-positive labels for a qid, ordered grade descending then id
  // ascending.
  std::vector<UtilityLabel> utility_passages(const std::string& qid) const;
  std::vector<std::string> qids_with_utility() const;
  size_t size() const { return by_key_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, UtilityLabel> by_key_;
  std::map<std::string, std::vector<UtilityLabel>> utility_by_qid_;
};

// Takes the top-n of `ranked`. When inject_utility is set and no top-n entry
// carries utility but some utility passage exists for the qid, the last slot
// is replaced by the best utility passage (grade desc, id asc) and flagged.
// Requesting more entries than available is an error.
CandidateList build_candidate_list(
    const std::string& qid,
    const std::vector<std::pair<std::string, double>>& ranked,
    const LabelSet& labels, int n, bool inject_utility,
    std::vector<std::string>* warnings = nullptr);

// Labels a candidate's passage as useful iff some gold answer occurs as a
// contiguous token run of the normalized passage text.
std::vector<UtilityLabel> auto_annotate_utility(const Question& question,
                                                const CandidateList& candidates,
                                                const PassageStore& passages);

// Sentence boundaries at . ! ? followed by whitespace (or end of text).
std::vector<std::string> split_sentences(std::string_view text);

// Greedy 3-sentence windows; a remainder of one sentence is regrouped with
// the previous window into 2+2. Window ids are `<id>-w<index>`.
std::vector<Passage> split_into_sentence_windows(const Passage& doc);

struct QaRecord {
  Question question;
  std::vector<std::string> candidate_ids;  // optional, may be empty
};

// JSONL rows: {qid, question, answers:[...], candidates:[pid,...]?}
std::vector<QaRecord> load_qa_jsonl(const std::string& path);

// TSV rows `qid<TAB>text` for retrieval-style query sets.
std::vector<Question> load_queries_tsv(const std::string& path);

}  // namespace item
