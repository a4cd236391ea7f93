#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "item/chat.hpp"
#include "item/corpus.hpp"
#include "item/engine.hpp"
#include "item/retrieval.hpp"

namespace item {

// Minimal declarative config format: `[table]`, `[[table array]]`, and
// `key = value` lines with strings, integers, reals, booleans, and flat
// arrays. Comments start with `#`.
struct TomlValue {
  std::variant<std::string, std::int64_t, double, bool,
               std::vector<std::string>>
      value;

  const std::string& as_string() const;
  std::int64_t as_int() const;
  double as_real() const;
  bool as_bool() const;
  const std::vector<std::string>& as_array() const;
};

struct TomlTable {
  std::map<std::string, TomlValue> values;
  std::map<std::string, TomlTable> tables;
  std::map<std::string, std::vector<TomlTable>> table_arrays;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

enum class BackendKind { mock_perfect, mock_noisy, http };
enum class RetrieverKind { bm25, run_file };

struct BackendSettings {
  BackendKind kind = BackendKind::mock_perfect;
  std::string model = "mock";
  std::string base_url;
  std::string api_path = "/v1/chat/completions";
  std::string api_key;  // `${VAR}` forms resolve from the environment
  double flip_probability = 0.2;
  std::uint64_t seed = 0;
  int max_in_flight = 4;
  RetryPolicy retry;
};

struct ExperimentConfig {
  // dataset
  std::string passages_path;
  PassageFormat passages_format = PassageFormat::tsv;
  std::string qrels_path;    // optional
  std::string qa_path;       // optional (questions + answers [+ candidates])
  std::string queries_path;  // optional (qid<TAB>text)
  int utility_grade = 3;
  int g_max = 3;
  bool auto_annotate = false;
  bool filter_questions = true;
  bool split_sentences = false;
  std::map<std::string, int> grade_map;  // word grades, e.g. perfect=3

  // retrieval
  RetrieverKind retriever = RetrieverKind::bm25;
  std::string run_file_path;
  int candidate_n = 20;
  bool inject_utility = true;
  Bm25Params bm25;

  // execution
  std::vector<MethodSpec> methods;
  BackendSettings backend;
  std::string cache_path;  // empty = no cache
  std::string output_dir = "out";
  std::string template_dir = "templates";
  std::uint64_t seed = 0;
  int jobs = 4;

  void validate() const;  // throws ConfigError
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_toml(const TomlTable& root);

}  // namespace item
