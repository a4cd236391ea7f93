#include "item/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "item/common.hpp"

namespace item {

const std::string& TomlValue::as_string() const {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw ConfigError("expected a string value");
}

std::int64_t TomlValue::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  throw ConfigError("expected an integer value");
}

double TomlValue::as_real() const {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    return static_cast<double>(*i);
  }
  throw ConfigError("expected a numeric value");
}

bool TomlValue::as_bool() const {
  if (const auto* b = std::get_if<bool>(&value)) return *b;
  throw ConfigError("expected a boolean value");
}

const std::vector<std::string>& TomlValue::as_array() const {
  if (const auto* a = std::get_if<std::vector<std::string>>(&value)) return *a;
  throw ConfigError("expected an array value");
}

std::string TomlTable::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.as_string();
}

std::int64_t TomlTable::get_int(const std::string& key,
                                std::int64_t fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.as_int();
}

double TomlTable::get_real(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.as_real();
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.as_bool();
}

namespace {

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw, size_t lineno) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    return {raw.substr(1, raw.size() - 2)};
  }
  if (raw == "true") return {true};
  if (raw == "false") return {false};
  try {
    size_t used = 0;
    if (raw.find('.') == std::string::npos &&
        raw.find('e') == std::string::npos &&
        raw.find('E') == std::string::npos) {
      const std::int64_t i = std::stoll(raw, &used);
      if (used == raw.size()) return {i};
    } else {
      const double d = std::stod(raw, &used);
      if (used == raw.size()) return {d};
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(lineno) + ": bad value `" + raw + "`");
}

TomlValue parse_value(const std::string& raw, size_t lineno) {
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') {
      throw ConfigError("line " + std::to_string(lineno) + ": unterminated array");
    }
    std::vector<std::string> items;
    std::string body = raw.substr(1, raw.size() - 2);
    std::string cur;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        const std::string t = trim(cur);
        if (!t.empty()) items.push_back(t);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    const std::string t = trim(cur);
    if (!t.empty()) items.push_back(t);
    std::vector<std::string> out;
    for (auto& it : items) {
      TomlValue v = parse_scalar(it, lineno);
      if (const auto* s = std::get_if<std::string>(&v.value)) {
        out.push_back(*s);
      } else if (const auto* i = std::get_if<std::int64_t>(&v.value)) {
        out.push_back(std::to_string(*i));
      } else if (const auto* d = std::get_if<double>(&v.value)) {
        std::ostringstream os;
        os << *d;
        out.push_back(os.str());
      } else {
        throw ConfigError("line " + std::to_string(lineno) +
                          ": arrays hold strings and numbers only");
      }
    }
    return {out};
  }
  return parse_scalar(raw, lineno);
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable root;
  TomlTable* current = &root;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      const bool array_table = line.rfind("[[", 0) == 0;
      const size_t close = line.find(array_table ? "]]" : "]");
      if (close == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) + ": bad table header");
      }
      const std::string name =
          trim(line.substr(array_table ? 2 : 1, close - (array_table ? 2 : 1)));
      if (name.empty()) {
        throw ConfigError("line " + std::to_string(lineno) + ": empty table name");
      }
      if (array_table) {
        root.table_arrays[name].emplace_back();
        current = &root.table_arrays[name].back();
      } else {
        current = &root.tables[name];
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    current->values[key] = parse_value(raw, lineno);
  }
  return root;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

namespace {

// Credentials may be written as `${VAR}`; nothing else is interpolated.
std::string resolve_credential(const std::string& raw) {
  if (raw.size() >= 4 && raw.rfind("${", 0) == 0 && raw.back() == '}') {
    const std::string var = raw.substr(2, raw.size() - 3);
    const char* value = std::getenv(var.c_str());
    return value != nullptr ? value : "";
  }
  return raw;
}

MethodSpec method_from_toml(const TomlTable& t, std::uint64_t default_seed) {
  MethodSpec spec;
  spec.method = method_from_string(t.get_string("method", "item_a_s"));
  const std::string mode = t.get_string("input_mode", "listwise");
  if (mode != "listwise" && mode != "pointwise") {
    throw ConfigError("input_mode must be listwise or pointwise");
  }
  spec.input_mode =
      mode == "pointwise" ? InputMode::pointwise : InputMode::listwise;
  const std::string kind = t.get_string("answer_kind", "explicit");
  if (kind != "explicit" && kind != "implicit") {
    throw ConfigError("answer_kind must be explicit or implicit");
  }
  spec.answer_kind = kind == "implicit" ? AnswerKind::implicit_answer
                                        : AnswerKind::explicit_answer;
  spec.m = static_cast<int>(t.get_int("m", 3));
  spec.topk_k = static_cast<int>(t.get_int("topk_k", 5));
  spec.sampling_k = static_cast<int>(t.get_int("sampling_k", 5));
  const std::string stop = t.get_string("stop_rule", "set_fixed_point");
  if (stop != "set_fixed_point" && stop != "answer_rouge") {
    throw ConfigError("stop_rule must be set_fixed_point or answer_rouge");
  }
  spec.stop_rule = stop == "answer_rouge" ? StopRule::answer_rouge
                                          : StopRule::set_fixed_point;
  spec.rouge_threshold = t.get_real("rouge_threshold", 0.9);
  spec.seed = static_cast<std::uint64_t>(t.get_int("seed", static_cast<std::int64_t>(default_seed)));
  if (t.has("include_note")) spec.include_note = t.get_bool("include_note", false);
  spec.implicit_wording = t.get_string("implicit_wording", "which") == "what"
                              ? ImplicitWording::what
                              : ImplicitWording::which;
  spec.answer_length_unit =
      t.get_string("answer_length_unit", "words") == "sentences"
          ? LengthUnit::sentences
          : LengthUnit::words;
  return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (passages_path.empty() && qa_path.empty()) {
    throw ConfigError("config needs a passages path or a qa path");
  }
  if (qa_path.empty() && queries_path.empty()) {
    throw ConfigError("config needs questions: qa or queries");
  }
  if (retriever == RetrieverKind::run_file && run_file_path.empty()) {
    throw ConfigError("run_file retriever needs run_file");
  }
  if (retriever == RetrieverKind::bm25 && passages_path.empty()) {
    throw ConfigError("bm25 retriever needs passages");
  }
  if (candidate_n < 1) throw ConfigError("candidate_n must be >= 1");
  if (utility_grade > g_max) {
    throw ConfigError("utility_grade exceeds g_max");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (methods.empty()) throw ConfigError("at least one [[method]] required");
  std::set<std::string> labels;
  for (const auto& spec : methods) {
    spec.validate();
    if (spec.topk_k > candidate_n) {
      throw ConfigError("topk_k " + std::to_string(spec.topk_k) +
                        " exceeds candidate_n " + std::to_string(candidate_n));
    }
    if (!labels.insert(spec.label()).second) {
      throw ConfigError("duplicate method configuration: " + spec.label());
    }
  }
  if (auto_annotate && qa_path.empty()) {
    throw ConfigError("auto_annotate needs a qa dataset with gold answers");
  }
  if (auto_annotate && inject_utility) {
    throw ConfigError("auto_annotate and inject_utility are mutually exclusive");
  }
  if (backend.kind == BackendKind::http && backend.base_url.empty()) {
    throw ConfigError("http backend needs base_url");
  }
}

ExperimentConfig experiment_config_from_toml(const TomlTable& root) {
  ExperimentConfig config;
  config.seed = static_cast<std::uint64_t>(root.get_int("seed", 0));
  config.output_dir = root.get_string("output_dir", "out");

  if (auto it = root.tables.find("dataset"); it != root.tables.end()) {
    const TomlTable& d = it->second;
    config.passages_path = d.get_string("passages", "");
    const std::string format = d.get_string("passages_format", "tsv");
    if (format != "tsv" && format != "jsonl") {
      throw ConfigError("passages_format must be tsv or jsonl");
    }
    config.passages_format =
        format == "jsonl" ? PassageFormat::jsonl : PassageFormat::tsv;
    config.qrels_path = d.get_string("qrels", "");
    config.qa_path = d.get_string("qa", "");
    config.queries_path = d.get_string("queries", "");
    config.utility_grade = static_cast<int>(d.get_int("utility_grade", 3));
    config.g_max = static_cast<int>(d.get_int("g_max", 3));
    config.auto_annotate = d.get_bool("auto_annotate", false);
    config.filter_questions = d.get_bool("filter_questions", true);
    config.split_sentences = d.get_bool("split_sentences", false);
  }
  if (auto it = root.tables.find("grade_map"); it != root.tables.end()) {
    for (const auto& [word, value] : it->second.values) {
      config.grade_map[word] = static_cast<int>(value.as_int());
    }
  }
  if (auto it = root.tables.find("retrieval"); it != root.tables.end()) {
    const TomlTable& r = it->second;
    const std::string kind = r.get_string("retriever", "bm25");
    if (kind != "bm25" && kind != "run_file") {
      throw ConfigError("retriever must be bm25 or run_file");
    }
    config.retriever =
        kind == "run_file" ? RetrieverKind::run_file : RetrieverKind::bm25;
    config.run_file_path = r.get_string("run_file", "");
    config.candidate_n = static_cast<int>(r.get_int("candidate_n", 20));
    config.inject_utility = r.get_bool("inject_utility", true);
    config.bm25.k1 = r.get_real("k1", 0.9);
    config.bm25.b = r.get_real("b", 0.4);
  }
  if (auto it = root.tables.find("backend"); it != root.tables.end()) {
    const TomlTable& b = it->second;
    const std::string kind = b.get_string("kind", "mock_perfect");
    if (kind == "mock_perfect") {
      config.backend.kind = BackendKind::mock_perfect;
    } else if (kind == "mock_noisy") {
      config.backend.kind = BackendKind::mock_noisy;
    } else if (kind == "http") {
      config.backend.kind = BackendKind::http;
    } else {
      throw ConfigError("backend kind must be mock_perfect, mock_noisy, or http");
    }
    config.backend.model = b.get_string("model", "mock");
    config.backend.base_url = b.get_string("base_url", "");
    config.backend.api_path = b.get_string("api_path", "/v1/chat/completions");
    config.backend.api_key = resolve_credential(b.get_string("api_key", ""));
    config.backend.flip_probability = b.get_real("flip_probability", 0.2);
    config.backend.seed =
        static_cast<std::uint64_t>(b.get_int("seed", static_cast<std::int64_t>(config.seed)));
    config.backend.max_in_flight = static_cast<int>(b.get_int("max_in_flight", 4));
    config.backend.retry.max_attempts =
        static_cast<int>(b.get_int("retry_max_attempts", 5));
    config.backend.retry.base_delay_ms =
        static_cast<int>(b.get_int("retry_base_ms", 1000));
    config.backend.retry.seed = config.backend.seed;
  }
  if (auto it = root.tables.find("run"); it != root.tables.end()) {
    const TomlTable& r = it->second;
    config.cache_path = r.get_string("cache", "");
    config.template_dir = r.get_string("templates", "templates");
    config.jobs = static_cast<int>(r.get_int("jobs", 4));
  }
  if (auto it = root.table_arrays.find("method"); it != root.table_arrays.end()) {
    for (const auto& t : it->second) {
      config.methods.push_back(method_from_toml(t, config.seed));
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_toml(parse_toml_file(path));
}

}  // namespace item
