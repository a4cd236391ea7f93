#include "item/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "item/common.hpp"

namespace item {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                       (c >= 'A' && c <= 'Z');
    if (alnum) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

InvertedIndex build_index(const std::vector<Passage>& passages) {
  if (passages.empty()) throw DataError("cannot index an empty collection");
  InvertedIndex index;
  index.doc_count = static_cast<int>(passages.size());
  long long total_len = 0;
  for (const auto& p : passages) {
    const auto tokens = tokenize(p.text);
    index.doc_lengths[p.id] = static_cast<int>(tokens.size());
    total_len += static_cast<long long>(tokens.size());
    std::map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
      index.postings[term].push_back({p.id, count});
    }
  }
  for (auto& [term, plist] : index.postings) {
    std::sort(plist.begin(), plist.end(),
              [](const Posting& a, const Posting& b) {
                return a.passage_id < b.passage_id;
              });
  }
  index.avg_doc_length =
      static_cast<double>(total_len) / static_cast<double>(index.doc_count);
  return index;
}

std::vector<std::pair<std::string, double>> bm25_search(
    const InvertedIndex& index, std::string_view query, int top_n,
    Bm25Params params) {
  if (top_n < 1) throw ConfigError("top_n must be >= 1");
  if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0) {
    throw ConfigError("bm25 parameters out of range");
  }
  const auto terms = tokenize(query);
  std::map<std::string, double> scores;
  const double n_docs = static_cast<double>(index.doc_count);
  for (const auto& term : terms) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    const auto& plist = it->second;
    const double df = static_cast<double>(plist.size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& posting : plist) {
      const double tf = static_cast<double>(posting.term_frequency);
      const double dl =
          static_cast<double>(index.doc_lengths.at(posting.passage_id));
      const double denom =
          tf + params.k1 * (1.0 - params.b + params.b * dl / index.avg_doc_length);
      scores[posting.passage_id] += idf * tf * (params.k1 + 1.0) / denom;
    }
  }
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (ranked.size() > static_cast<size_t>(top_n)) {
    ranked.resize(static_cast<size_t>(top_n));
  }
  return ranked;
}

std::vector<RunEntry> load_run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<RunEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_whitespace(line);
    if (fields.size() != 6) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `qid Q0 pid rank score tag`");
    }
    RunEntry e;
    e.qid = fields[0];
    e.passage_id = fields[2];
    try {
      e.rank = std::stoi(fields[3]);
      e.score = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": bad rank or score");
    }
    e.tag = fields[5];
    out.push_back(std::move(e));
  }

  std::map<std::string, std::vector<const RunEntry*>> by_qid;
  for (const auto& e : out) by_qid[e.qid].push_back(&e);
  for (auto& [qid, group] : by_qid) {
    std::sort(group.begin(), group.end(),
              [](const RunEntry* a, const RunEntry* b) { return a->rank < b->rank; });
    for (size_t i = 0; i < group.size(); ++i) {
      if (group[i]->rank != static_cast<int>(i) + 1) {
        throw DataError(path + ": rank gap for qid " + qid);
      }
      if (i > 0 && group[i]->score > group[i - 1]->score) {
        throw DataError(path + ": scores not non-increasing for qid " + qid);
      }
    }
  }
  return out;
}

void save_run_file(const std::string& path, const std::vector<RunEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& e : entries) {
    std::ostringstream row;
    row.precision(6);
    row << e.qid << " Q0 " << e.passage_id << ' ' << e.rank << ' ' << e.score
        << ' ' << e.tag;
    out << row.str() << '\n';
  }
}

std::vector<std::pair<std::string, double>> run_results_for(
    const std::vector<RunEntry>& entries, const std::string& qid) {
  std::vector<const RunEntry*> group;
  for (const auto& e : entries) {
    if (e.qid == qid) group.push_back(&e);
  }
  std::sort(group.begin(), group.end(),
            [](const RunEntry* a, const RunEntry* b) { return a->rank < b->rank; });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(group.size());
  for (const auto* e : group) out.emplace_back(e->passage_id, e->score);
  return out;
}

}  // namespace item
