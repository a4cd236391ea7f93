#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "item/corpus.hpp"

namespace item {

struct Posting {
  std::string passage_id;
  int term_frequency = 0;
};

struct InvertedIndex {
  std::map<std::string, std::vector<Posting>> postings;  // sorted by passage_id
  std::map<std::string, int> doc_lengths;
  double avg_doc_length = 0.0;
  int doc_count = 0;
};

// Lowercase, split on non-alphanumeric bytes. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

InvertedIndex build_index(const std::vector<Passage>& passages);

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

// score(q,d) = sum over query tokens of
//   idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*|d|/avgdl)),
// idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).
// Sorted score descending, ties by ascending passage id; only matches appear.
std::vector<std::pair<std::string, double>> bm25_search(
    const InvertedIndex& index, std::string_view query, int top_n,
    Bm25Params params = {});

struct RunEntry {
  std::string qid;
  std::string passage_id;
  int rank = 0;
  double score = 0.0;
  std::string tag;
};

// TREC run format `qid Q0 pid rank score tag`; per-qid ranks must be 1..n
// without gaps and scores non-increasing with rank.
std::vector<RunEntry> load_run_file(const std::string& path);

void save_run_file(const std::string& path, const std::vector<RunEntry>& entries);

// Ranked (pid, score) list for one qid, in rank order.
std::vector<std::pair<std::string, double>> run_results_for(
    const std::vector<RunEntry>& entries, const std::string& qid);

}  // namespace item
