#include "item/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "item/common.hpp"
#include "item/metrics.hpp"

namespace item {

std::vector<std::string> CandidateList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.passage_id);
  return out;
}

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<Passage> load_passages(const std::string& path,
                                   PassageFormat format) {
  auto in = open_or_throw(path);
  std::vector<Passage> out;
  std::set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    Passage p;
    if (format == PassageFormat::tsv) {
      const size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected `id<TAB>text`");
      }
      p.id = line.substr(0, tab);
      p.text = line.substr(tab + 1);
    } else {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
          !j.contains("text")) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected object with id and text");
      }
      p.id = j["id"].get<std::string>();
      p.text = j["text"].get<std::string>();
      if (j.contains("title")) p.title = j["title"].get<std::string>();
    }
    if (p.id.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty passage id");
    }
    if (p.text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty passage text");
    }
    if (!seen.insert(p.id).second) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate passage id " + p.id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

PassageStore::PassageStore(std::vector<Passage> passages)
    : passages_(std::move(passages)) {
  for (size_t i = 0; i < passages_.size(); ++i) by_id_[passages_[i].id] = i;
}

const Passage* PassageStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &passages_[it->second];
}

const Passage& PassageStore::at(const std::string& id) const {
  const Passage* p = find(id);
  if (!p) throw DataError("unknown passage id: " + id);
  return *p;
}

std::vector<GradedJudgment> load_qrels(
    const std::string& path, int g_max,
    const std::map<std::string, int>* grade_map) {
  auto in = open_or_throw(path);
  std::vector<GradedJudgment> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto fields = split_whitespace(line);
    if (fields.size() != 4) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `qid 0 pid grade`");
    }
    GradedJudgment j;
    j.qid = fields[0];
    j.passage_id = fields[2];
    if (grade_map != nullptr && grade_map->count(fields[3]) != 0) {
      j.grade = grade_map->at(fields[3]);
    } else {
      try {
        size_t used = 0;
        j.grade = std::stoi(fields[3], &used);
        if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": non-integer grade `" + fields[3] + "`");
      }
    }
    if (j.grade < 0 || j.grade > g_max) {
      throw DataError(path + ":" + std::to_string(lineno) + ": grade " +
                      std::to_string(j.grade) + " outside [0, " +
                      std::to_string(g_max) + "]");
    }
    if (!seen.insert({j.qid, j.passage_id}).second) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate (" +
                      j.qid + ", " + j.passage_id + ")");
    }
    out.push_back(std::move(j));
  }
  return out;
}

void save_qrels(const std::string& path,
                const std::vector<GradedJudgment>& judgments) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& j : judgments) {
    out << j.qid << " 0 " << j.passage_id << ' ' << j.grade << '\n';
  }
}

std::vector<UtilityLabel> derive_utility_labels(
    const std::vector<GradedJudgment>& judgments, int utility_grade) {
  std::vector<UtilityLabel> out;
  out.reserve(judgments.size());
  for (const auto& j : judgments) {
    out.push_back({j.qid, j.passage_id, j.grade >= utility_grade, j.grade});
  }
  return out;
}

LabelSet::LabelSet(const std::vector<UtilityLabel>& labels) {
  for (const auto& l : labels) {
    by_key_[{l.qid, l.passage_id}] = l;
    if (l.has_utility) utility_by_qid_[l.qid].push_back(l);
  }
  for (auto& [qid, v] : utility_by_qid_) {
    std::sort(v.begin(), v.end(), [](const UtilityLabel& a, const UtilityLabel& b) {
      if (a.grade != b.grade) return a.grade > b.grade;
      return a.passage_id < b.passage_id;
    });
  }
}

bool LabelSet::has_utility(const std::string& qid, const std::string& pid) const {
  auto it = by_key_.find({qid, pid});
  return it != by_key_.end() && it->second.has_utility;
}

std::vector<UtilityLabel> LabelSet::utility_passages(const std::string& qid) const {
  auto it = utility_by_qid_.find(qid);
  return it == utility_by_qid_.end() ? std::vector<UtilityLabel>{} : it->second;
}

std::vector<std::string> LabelSet::qids_with_utility() const {
  std::vector<std::string> out;
  out.reserve(utility_by_qid_.size());
  for (const auto& [qid, v] : utility_by_qid_) {
    if (!v.empty()) out.push_back(qid);
  }
  return out;
}

CandidateList build_candidate_list(
    const std::string& qid,
    const std::vector<std::pair<std::string, double>>& ranked,
    const LabelSet& labels, int n, bool inject_utility,
    std::vector<std::string>* warnings) {
  if (n < 1) throw ConfigError("candidate list size must be >= 1");
  if (static_cast<size_t>(n) > ranked.size()) {
    throw DataError("requested top-" + std::to_string(n) + " but only " +
                    std::to_string(ranked.size()) + " results for " + qid);
  }
  CandidateList out;
  out.qid = qid;
  out.entries.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.entries.push_back({ranked[static_cast<size_t>(i)].first,
                           ranked[static_cast<size_t>(i)].second, false});
  }
  if (!inject_utility) return out;

  bool any_utility = false;
  for (const auto& e : out.entries) {
    if (labels.has_utility(qid, e.passage_id)) {
      any_utility = true;
      break;
    }
  }
  if (any_utility) return out;

  const auto pool = labels.utility_passages(qid);
  if (pool.empty()) {
    if (warnings != nullptr) {
      warnings->push_back(qid + ": no utility passage exists; list unmodified");
    }
    return out;
  }
  out.entries.back() = {pool.front().passage_id, 0.0, true};
  return out;
}

std::vector<UtilityLabel> auto_annotate_utility(const Question& question,
                                                const CandidateList& candidates,
                                                const PassageStore& passages) {
  if (question.gold_answers.empty()) {
    throw DataError("auto annotation needs gold answers for " + question.qid);
  }
  std::vector<std::string> norm_answers;
  for (const auto& a : question.gold_answers) {
    auto na = normalize_answer(a);
    if (!na.empty()) norm_answers.push_back(" " + na + " ");
  }
  std::vector<UtilityLabel> out;
  out.reserve(candidates.entries.size());
  for (const auto& e : candidates.entries) {
    const Passage& p = passages.at(e.passage_id);
    const std::string body = " " + normalize_answer(p.text) + " ";
    bool hit = false;
    for (const auto& na : norm_answers) {
      if (body.find(na) != std::string::npos) {
        hit = true;
        break;
      }
    }
    out.push_back({question.qid, e.passage_id, hit, hit ? 1 : 0});
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == text.size();
    if (!at_end && !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    const std::string sentence = trim(text.substr(start, i + 1 - start));
    if (!sentence.empty()) out.push_back(sentence);
    start = i + 1;
  }
  const std::string tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

std::vector<Passage> split_into_sentence_windows(const Passage& doc) {
  const auto sentences = split_sentences(doc.text);
  std::vector<size_t> sizes;
  size_t n = sentences.size();
  if (n == 0) return {};
  while (n >= 3) {
    // A remainder of exactly 4 becomes 2+2 instead of 3+1.
    if (n == 4) {
      sizes.push_back(2);
      n -= 2;
    } else {
      sizes.push_back(3);
      n -= 3;
    }
  }
  if (n > 0) sizes.push_back(n);

  std::vector<Passage> out;
  size_t pos = 0;
  for (size_t w = 0; w < sizes.size(); ++w) {
    std::string body;
    for (size_t i = 0; i < sizes[w]; ++i) {
      if (!body.empty()) body.push_back(' ');
      body += sentences[pos++];
    }
    out.push_back({doc.id + "-w" + std::to_string(w + 1), body, doc.title});
  }
  return out;
}

std::vector<QaRecord> load_qa_jsonl(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<QaRecord> out;
  std::set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("qid") ||
        !j.contains("question")) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected object with qid and question");
    }
    QaRecord rec;
    rec.question.qid = j["qid"].get<std::string>();
    rec.question.text = j["question"].get<std::string>();
    if (rec.question.qid.empty() || rec.question.text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": qid and question must be non-empty");
    }
    if (j.contains("answers")) {
      for (const auto& a : j["answers"]) {
        rec.question.gold_answers.push_back(a.get<std::string>());
      }
    }
    if (j.contains("candidates")) {
      for (const auto& c : j["candidates"]) {
        rec.candidate_ids.push_back(c.get<std::string>());
      }
    }
    if (!seen.insert(rec.question.qid).second) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate qid " + rec.question.qid);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Question> load_queries_tsv(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<Question> out;
  std::set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `qid<TAB>text`");
    }
    Question q;
    q.qid = line.substr(0, tab);
    q.text = line.substr(tab + 1);
    if (q.qid.empty() || q.text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": qid and text must be non-empty");
    }
    if (!seen.insert(q.qid).second) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate qid " +
                      q.qid);
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace item
