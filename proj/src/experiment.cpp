#include "item/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "item/common.hpp"
#include "item/retrieval.hpp"

namespace item {

namespace {

std::string fmt_pct(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value * 100.0);
  return buf;
}

template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  const int count = std::min<int>(jobs, static_cast<int>(n));
  workers.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (auto& worker : workers) worker.join();
}

}  // namespace

PreparedDataset prepare_dataset(const ExperimentConfig& config) {
  PreparedDataset ds;

  if (!config.passages_path.empty()) {
    auto raw = load_passages(config.passages_path, config.passages_format);
    if (config.split_sentences) {
      std::vector<Passage> windows;
      for (const auto& doc : raw) {
        auto parts = split_into_sentence_windows(doc);
        windows.insert(windows.end(), parts.begin(), parts.end());
      }
      raw = std::move(windows);
    }
    ds.passages = PassageStore(std::move(raw));
  }

  std::vector<QaRecord> qa_records;
  if (!config.qa_path.empty()) {
    qa_records = load_qa_jsonl(config.qa_path);
    for (const auto& rec : qa_records) ds.questions.push_back(rec.question);
  } else {
    ds.questions = load_queries_tsv(config.queries_path);
  }

  if (!config.qrels_path.empty()) {
    ds.judgments = load_qrels(config.qrels_path, config.g_max,
                              config.grade_map.empty() ? nullptr
                                                       : &config.grade_map);
    ds.labels = derive_utility_labels(ds.judgments, config.utility_grade);
    ds.label_set = LabelSet(ds.labels);
  }

  // Questions with no utility-labeled passage anywhere cannot be scored.
  if (config.filter_questions && !config.auto_annotate &&
      !ds.labels.empty()) {
    std::vector<Question> kept;
    for (auto& q : ds.questions) {
      if (!ds.label_set.utility_passages(q.qid).empty()) {
        kept.push_back(std::move(q));
      } else {
        ds.warnings.push_back(q.qid + ": no utility-labeled passage; skipped");
      }
    }
    ds.questions = std::move(kept);
  }

  std::map<std::string, std::vector<std::string>> prebuilt;
  for (const auto& rec : qa_records) {
    if (!rec.candidate_ids.empty()) prebuilt[rec.question.qid] = rec.candidate_ids;
  }

  std::optional<InvertedIndex> index;
  if (config.retriever == RetrieverKind::bm25 && prebuilt.size() < ds.questions.size()) {
    index = build_index(ds.passages.all());
  }
  std::vector<RunEntry> run_entries;
  if (config.retriever == RetrieverKind::run_file) {
    run_entries = load_run_file(config.run_file_path);
  }

  std::vector<Question> with_candidates;
  for (auto& q : ds.questions) {
    try {
      if (auto it = prebuilt.find(q.qid); it != prebuilt.end()) {
        CandidateList list;
        list.qid = q.qid;
        const size_t n = std::min<size_t>(it->second.size(),
                                          static_cast<size_t>(config.candidate_n));
        for (size_t i = 0; i < n; ++i) {
          ds.passages.at(it->second[i]);  // must exist
          list.entries.push_back({it->second[i], 0.0, false});
        }
        if (list.entries.empty()) throw DataError("empty candidate list");
        ds.candidates[q.qid] = std::move(list);
      } else {
        std::vector<std::pair<std::string, double>> ranked;
        if (config.retriever == RetrieverKind::bm25) {
          ranked = bm25_search(*index, q.text, config.candidate_n, config.bm25);
        } else {
          ranked = run_results_for(run_entries, q.qid);
        }
        ds.candidates[q.qid] = build_candidate_list(
            q.qid, ranked, ds.label_set, config.candidate_n,
            config.inject_utility, &ds.warnings);
      }
      with_candidates.push_back(std::move(q));
    } catch (const std::exception& e) {
      ds.warnings.push_back(q.qid + ": candidate construction failed: " + e.what());
    }
  }
  ds.questions = std::move(with_candidates);

  if (config.auto_annotate) {
    ds.warnings.push_back(
        "utility labels auto-annotated: a passage counts as useful iff a gold "
        "answer occurs in its normalized text");
    std::vector<Question> kept;
    for (auto& q : ds.questions) {
      if (q.gold_answers.empty()) {
        ds.warnings.push_back(q.qid + ": no gold answers; cannot auto-annotate");
        continue;
      }
      auto annotated =
          auto_annotate_utility(q, ds.candidates.at(q.qid), ds.passages);
      ds.labels.insert(ds.labels.end(), annotated.begin(), annotated.end());
      kept.push_back(std::move(q));
    }
    ds.questions = std::move(kept);
    ds.label_set = LabelSet(ds.labels);
    if (config.filter_questions) {
      std::vector<Question> scored;
      for (auto& q : ds.questions) {
        if (!ds.label_set.utility_passages(q.qid).empty()) {
          scored.push_back(std::move(q));
        } else {
          ds.warnings.push_back(q.qid + ": no useful candidate after annotation; skipped");
        }
      }
      ds.questions = std::move(scored);
    }
  }

  for (const auto& l : ds.labels) ds.grades[l.qid][l.passage_id] = l.grade;
  return ds;
}

std::unique_ptr<ChatBackend> make_backend(const ExperimentConfig& config,
                                          const PreparedDataset& dataset) {
  if (config.backend.kind == BackendKind::http) {
    HttpBackendConfig http;
    http.base_url = config.backend.base_url;
    http.path = config.backend.api_path;
    http.api_key = config.backend.api_key;
    http.retry = config.backend.retry;
    http.max_in_flight = config.backend.max_in_flight;
    return std::make_unique<HttpBackend>(std::move(http));
  }
  OracleSpec spec;
  spec.mode = config.backend.kind == BackendKind::mock_noisy
                  ? OracleMode::noisy
                  : OracleMode::perfect;
  spec.labels = dataset.labels;
  spec.judgments = dataset.judgments;
  for (const auto& q : dataset.questions) {
    if (!q.gold_answers.empty()) spec.gold_answers[q.qid] = q.gold_answers;
  }
  spec.flip_probability = config.backend.flip_probability;
  spec.seed = config.backend.seed;
  return std::make_unique<OracleBackend>(std::move(spec));
}

EvalReport evaluate_traces(const TraceMatrix& traces,
                           const std::vector<MethodSpec>& methods,
                           const PreparedDataset& dataset, std::uint64_t seed) {
  EvalReport report;
  report.seed = seed;
  report.question_count = static_cast<int>(dataset.questions.size());
  report.dataset_warnings = dataset.warnings;

  std::uint64_t exchanges = 0;
  std::uint64_t cached = 0;

  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const MethodSpec& spec = methods[mi];
    MethodSummary summary;
    summary.label = spec.label();
    summary.has_judgments = spec.produces_judgments();
    summary.has_ranking = spec.produces_ranking();

    double p_sum = 0, r_sum = 0, f_sum = 0;
    std::map<int, double> ndcg_sum;
    double em_sum = 0, f1_sum = 0;
    int answered = 0;

    for (size_t qi = 0; qi < dataset.questions.size(); ++qi) {
      const auto& slot = traces[mi][qi];
      if (!slot) continue;
      const RunTrace& trace = *slot;
      const Question& q = dataset.questions[qi];
      ++summary.question_count;
      summary.parse_errors += trace.parse_errors;
      summary.ambiguous_verdicts += trace.ambiguous_verdicts;
      summary.step_errors += static_cast<int>(trace.errors.size());

      QuestionRow row;
      row.label = summary.label;
      row.qid = q.qid;
      const IterationState& final_state = trace.states.back();

      if (summary.has_judgments) {
        std::set<std::string> gold;
        for (const auto& e : dataset.candidates.at(q.qid).entries) {
          if (dataset.label_set.has_utility(q.qid, e.passage_id)) {
            gold.insert(e.passage_id);
          }
        }
        const std::set<std::string> predicted(
            final_state.utility.passage_ids.begin(),
            final_state.utility.passage_ids.end());
        const SetPRF prf = set_prf(predicted, gold);
        row.utility = prf;
        p_sum += prf.precision;
        r_sum += prf.recall;
        f_sum += prf.f1;
      }

      if (summary.has_ranking) {
        std::map<std::string, int> grades;
        if (auto it = dataset.grades.find(q.qid); it != dataset.grades.end()) {
          grades = it->second;
        }
        for (int k : ndcg_cutoffs()) {
          const double v = ndcg_at_k(final_state.ranking.order, grades,
                                     {k, NdcgGain::linear});
          row.ndcg[k] = v;
          ndcg_sum[k] += v;
        }
      }

      if (trace.final_answer && !q.gold_answers.empty()) {
        row.em = static_cast<double>(
            exact_match(*trace.final_answer, q.gold_answers));
        row.token_f1 = token_f1(*trace.final_answer, q.gold_answers);
        em_sum += *row.em;
        f1_sum += *row.token_f1;
        ++answered;
      }

      for (const auto& e : trace.exchanges) {
        ++exchanges;
        if (e.cached) ++cached;
      }
      report.rows.push_back(std::move(row));
    }

    const int n = summary.question_count;
    if (n > 0 && summary.has_judgments) {
      summary.utility = {p_sum / n, r_sum / n, f_sum / n};
    }
    if (n > 0 && summary.has_ranking) {
      for (int k : ndcg_cutoffs()) summary.ndcg[k] = ndcg_sum[k] / n;
    }
    if (answered > 0) {
      summary.has_answers = true;
      summary.em = em_sum / answered;
      summary.token_f1 = f1_sum / answered;
    }
    report.methods.push_back(std::move(summary));
  }

  report.cache_hit_rate =
      exchanges == 0 ? 0.0 : static_cast<double>(cached) / exchanges;
  return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  // Created before the cache opens: the cache commonly lives inside it.
  std::filesystem::create_directories(config.output_dir);

  PreparedDataset dataset = prepare_dataset(config);
  if (dataset.questions.empty()) {
    throw ConfigError("no questions left to evaluate after preparation");
  }

  auto backend = make_backend(config, dataset);
  std::unique_ptr<ChatCache> cache;
  if (!config.cache_path.empty()) {
    cache = std::make_unique<ChatCache>(config.cache_path);
  }
  const TemplateSet templates = TemplateSet::load(config.template_dir);
  Engine engine(templates, *backend, cache.get(), config.backend.model);

  const size_t n_questions = dataset.questions.size();
  const size_t n_methods = config.methods.size();
  ExperimentResult result;
  result.traces.assign(n_methods, std::vector<std::optional<RunTrace>>(n_questions));
  std::vector<std::string> failures(n_questions);

  parallel_for(n_questions, config.jobs, [&](size_t qi) {
    const Question& q = dataset.questions[qi];
    std::vector<Passage> candidates;
    for (const auto& e : dataset.candidates.at(q.qid).entries) {
      candidates.push_back(dataset.passages.at(e.passage_id));
    }
    for (size_t mi = 0; mi < n_methods; ++mi) {
      try {
        result.traces[mi][qi] = engine.run(q, candidates, config.methods[mi]);
      } catch (const std::exception& e) {
        if (!failures[qi].empty()) failures[qi] += "; ";
        failures[qi] += config.methods[mi].label() + ": " + e.what();
      }
    }
  });

  result.report =
      evaluate_traces(result.traces, config.methods, dataset, config.seed);
  result.report.backend_calls = backend->call_count();
  if (cache) result.report.cache_io_warnings = cache->io_warnings();
  for (size_t qi = 0; qi < n_questions; ++qi) {
    if (!failures[qi].empty()) {
      result.report.failures.push_back(dataset.questions[qi].qid + ": " +
                                       failures[qi]);
    }
  }

  for (size_t mi = 0; mi < n_methods; ++mi) {
    if (result.report.methods[mi].question_count == 0) result.exit_code = 1;
  }
  if (!result.report.failures.empty()) result.exit_code = 1;

  for (size_t mi = 0; mi < n_methods; ++mi) {
    std::vector<RunTrace> good;
    for (const auto& slot : result.traces[mi]) {
      if (slot) good.push_back(*slot);
    }
    save_traces(config.output_dir + "/traces-" + config.methods[mi].label() +
                    ".jsonl",
                good);
  }

  {
    std::ofstream csv(config.output_dir + "/per_question.csv");
    csv << "method,qid,precision,recall,f1";
    for (int k : ndcg_cutoffs()) csv << ",ndcg@" << k;
    csv << ",em,token_f1\n";
    for (const auto& row : result.report.rows) {
      csv << row.label << ',' << row.qid;
      if (row.utility) {
        csv << ',' << fmt_pct(row.utility->precision) << ','
            << fmt_pct(row.utility->recall) << ',' << fmt_pct(row.utility->f1);
      } else {
        csv << ",,,";
      }
      for (int k : ndcg_cutoffs()) {
        csv << ',';
        if (auto it = row.ndcg.find(k); it != row.ndcg.end()) {
          csv << fmt_pct(it->second);
        }
      }
      csv << ',' << (row.em ? fmt_pct(*row.em) : "") << ','
          << (row.token_f1 ? fmt_pct(*row.token_f1) : "") << '\n';
    }
  }

  {
    std::ofstream json_out(config.output_dir + "/report.json");
    json_out << report_to_json(result.report).dump(2) << '\n';
  }
  render_report(result.report, ReportFormat::markdown,
                config.output_dir + "/report.md");
  render_report(result.report, ReportFormat::csv,
                config.output_dir + "/report.csv");
  return result;
}

std::string render_report_text(const EvalReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "method,group,precision,recall,f1";
    for (int k : ndcg_cutoffs()) out << ",ndcg@" << k;
    out << ",em,token_f1\n";
    for (const auto& m : report.methods) {
      out << m.label << ",utility";
      if (m.has_judgments && m.question_count > 0) {
        out << ',' << fmt_pct(m.utility.precision) << ','
            << fmt_pct(m.utility.recall) << ',' << fmt_pct(m.utility.f1);
      } else {
        out << ",,,";
      }
      for (size_t i = 0; i < ndcg_cutoffs().size(); ++i) out << ',';
      out << ",,\n";

      out << m.label << ",ranking,,,";
      for (int k : ndcg_cutoffs()) {
        out << ',';
        if (m.has_ranking && m.question_count > 0) out << fmt_pct(m.ndcg.at(k));
      }
      out << ",,\n";

      out << m.label << ",answer,,,";
      for (size_t i = 0; i < ndcg_cutoffs().size(); ++i) out << ',';
      out << ',' << (m.has_answers ? fmt_pct(m.em) : "") << ','
          << (m.has_answers ? fmt_pct(m.token_f1) : "") << '\n';
    }
    return out.str();
  }

  out << "# Evaluation report\n\n";
  out << "- seed: " << report.seed << '\n';
  out << "- questions evaluated: " << report.question_count << '\n';
  out << "- methods: " << report.methods.size() << "\n\n";

  out << "## Utility judgments (macro %, per question)\n\n";
  out << "| method | questions | precision | recall | f1 |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& m : report.methods) {
    if (!m.has_judgments) continue;
    out << "| " << m.label << " | " << m.question_count << " | "
        << fmt_pct(m.utility.precision) << " | " << fmt_pct(m.utility.recall)
        << " | " << fmt_pct(m.utility.f1) << " |\n";
  }

  out << "\n## Topical relevance ranking (NDCG %, macro)\n\n";
  out << "| method |";
  for (int k : ndcg_cutoffs()) out << " N@" << k << " |";
  out << "\n|---|";
  for (size_t i = 0; i < ndcg_cutoffs().size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& m : report.methods) {
    if (!m.has_ranking || m.question_count == 0) continue;
    out << "| " << m.label << " |";
    for (int k : ndcg_cutoffs()) out << ' ' << fmt_pct(m.ndcg.at(k)) << " |";
    out << '\n';
  }

  out << "\n## Answer generation (%, macro)\n\n";
  out << "| method | em | token_f1 |\n|---|---:|---:|\n";
  for (const auto& m : report.methods) {
    if (!m.has_answers) continue;
    out << "| " << m.label << " | " << fmt_pct(m.em) << " | "
        << fmt_pct(m.token_f1) << " |\n";
  }

  out << "\n## Parse warnings\n\n";
  out << "| method | parse_errors | ambiguous_verdicts | step_errors |\n";
  out << "|---|---:|---:|---:|\n";
  for (const auto& m : report.methods) {
    out << "| " << m.label << " | " << m.parse_errors << " | "
        << m.ambiguous_verdicts << " | " << m.step_errors << " |\n";
  }

  if (!report.dataset_warnings.empty()) {
    out << "\n## Dataset warnings\n\n";
    for (const auto& w : report.dataset_warnings) out << "- " << w << '\n';
  }
  if (!report.failures.empty()) {
    out << "\n## Failures\n\n";
    for (const auto& f : report.failures) out << "- " << f << '\n';
  }
  return out.str();
}

void render_report(const EvalReport& report, ReportFormat format,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path);
  out << render_report_text(report, format);
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["question_count"] = report.question_count;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json jm;
    jm["label"] = m.label;
    jm["question_count"] = m.question_count;
    jm["has_judgments"] = m.has_judgments;
    jm["precision"] = m.utility.precision;
    jm["recall"] = m.utility.recall;
    jm["f1"] = m.utility.f1;
    jm["has_ranking"] = m.has_ranking;
    nlohmann::json ndcg = nlohmann::json::object();
    for (const auto& [k, v] : m.ndcg) ndcg[std::to_string(k)] = v;
    jm["ndcg"] = std::move(ndcg);
    jm["has_answers"] = m.has_answers;
    jm["em"] = m.em;
    jm["token_f1"] = m.token_f1;
    jm["parse_errors"] = m.parse_errors;
    jm["ambiguous_verdicts"] = m.ambiguous_verdicts;
    jm["step_errors"] = m.step_errors;
    methods.push_back(std::move(jm));
  }
  j["methods"] = std::move(methods);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json jr;
    jr["label"] = r.label;
    jr["qid"] = r.qid;
    if (r.utility) {
      jr["precision"] = r.utility->precision;
      jr["recall"] = r.utility->recall;
      jr["f1"] = r.utility->f1;
    }
    nlohmann::json ndcg = nlohmann::json::object();
    for (const auto& [k, v] : r.ndcg) ndcg[std::to_string(k)] = v;
    jr["ndcg"] = std::move(ndcg);
    if (r.em) jr["em"] = *r.em;
    if (r.token_f1) jr["token_f1"] = *r.token_f1;
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  j["dataset_warnings"] = report.dataset_warnings;
  j["failures"] = report.failures;
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.question_count = j.at("question_count").get<int>();
  for (const auto& jm : j.at("methods")) {
    MethodSummary m;
    m.label = jm.at("label").get<std::string>();
    m.question_count = jm.at("question_count").get<int>();
    m.has_judgments = jm.at("has_judgments").get<bool>();
    m.utility.precision = jm.at("precision").get<double>();
    m.utility.recall = jm.at("recall").get<double>();
    m.utility.f1 = jm.at("f1").get<double>();
    m.has_ranking = jm.at("has_ranking").get<bool>();
    for (const auto& [k, v] : jm.at("ndcg").items()) {
      m.ndcg[std::stoi(k)] = v.get<double>();
    }
    m.has_answers = jm.at("has_answers").get<bool>();
    m.em = jm.at("em").get<double>();
    m.token_f1 = jm.at("token_f1").get<double>();
    m.parse_errors = jm.at("parse_errors").get<int>();
    m.ambiguous_verdicts = jm.at("ambiguous_verdicts").get<int>();
    m.step_errors = jm.at("step_errors").get<int>();
    report.methods.push_back(std::move(m));
  }
  for (const auto& jr : j.at("rows")) {
    QuestionRow r;
    r.label = jr.at("label").get<std::string>();
    r.qid = jr.at("qid").get<std::string>();
    if (jr.contains("precision")) {
      SetPRF prf;
      prf.precision = jr.at("precision").get<double>();
      prf.recall = jr.at("recall").get<double>();
      prf.f1 = jr.at("f1").get<double>();
      r.utility = prf;
    }
    for (const auto& [k, v] : jr.at("ndcg").items()) {
      r.ndcg[std::stoi(k)] = v.get<double>();
    }
    if (jr.contains("em")) r.em = jr.at("em").get<double>();
    if (jr.contains("token_f1")) r.token_f1 = jr.at("token_f1").get<double>();
    report.rows.push_back(std::move(r));
  }
  report.dataset_warnings =
      j.at("dataset_warnings").get<std::vector<std::string>>();
  report.failures = j.at("failures").get<std::vector<std::string>>();
  return report;
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  if (name == "m") return SweepParameter::iteration_cap;
  if (name == "topk_k" || name == "k") return SweepParameter::topk;
  if (name == "p" || name == "rouge_threshold") return SweepParameter::rouge_p;
  throw ConfigError("sweep parameter must be one of: m, topk_k, p");
}

namespace {

std::string sweep_parameter_name(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::iteration_cap: return "m";
    case SweepParameter::topk: return "topk_k";
    case SweepParameter::rouge_p: return "p";
  }
  return "m";
}

// Label that stays constant across swept values, for table columns.
std::string family_label(const MethodSpec& spec) {
  std::string out = method_to_string(spec.method);
  if (spec.is_item()) {
    out += spec.answer_kind == AnswerKind::explicit_answer ? "-expa" : "-impa";
  }
  if (spec.input_mode == InputMode::pointwise) out += "-pw";
  return out;
}

int apply_sweep_value(std::vector<MethodSpec>& methods, SweepParameter parameter,
                      const std::string& value) {
  int touched = 0;
  for (auto& spec : methods) {
    switch (parameter) {
      case SweepParameter::iteration_cap:
        if (spec.is_item()) {
          spec.m = std::stoi(value);
          ++touched;
        }
        break;
      case SweepParameter::topk:
        if (spec.method == Method::item_a_r || spec.method == Method::item_ar_r) {
          spec.topk_k = std::stoi(value);
          ++touched;
        }
        break;
      case SweepParameter::rouge_p:
        if (spec.is_item() && spec.stop_rule == StopRule::answer_rouge) {
          spec.rouge_threshold = std::stod(value);
          ++touched;
        }
        break;
    }
  }
  return touched;
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& config,
                            SweepParameter parameter,
                            const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs a non-empty value list");
  {
    auto probe = config.methods;
    if (apply_sweep_value(probe, parameter, values.front()) == 0) {
      throw ConfigError("sweep parameter " + sweep_parameter_name(parameter) +
                        " applies to none of the configured methods");
    }
  }
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    ExperimentConfig run_config = config;
    apply_sweep_value(run_config.methods, parameter, value);
    run_config.output_dir = config.output_dir + "/sweep-" +
                            sweep_parameter_name(parameter) + "-" + value;
    run_config.validate();
    rows.push_back({value, run_experiment(run_config).report});
  }
  return rows;
}

std::string render_sweep_markdown(const ExperimentConfig& config,
                                  SweepParameter parameter,
                                  const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  const std::string name = sweep_parameter_name(parameter);
  out << "# Sweep over " << name << "\n\n| " << name << " |";
  for (const auto& spec : config.methods) {
    out << ' ' << family_label(spec) << " F1 |";
    if (spec.produces_ranking()) out << ' ' << family_label(spec) << " N@5 |";
  }
  out << "\n|---|";
  for (const auto& spec : config.methods) {
    out << "---:|";
    if (spec.produces_ranking()) out << "---:|";
  }
  out << '\n';
  for (const auto& row : rows) {
    out << "| " << row.value << " |";
    for (size_t mi = 0; mi < config.methods.size(); ++mi) {
      const auto& m = row.report.methods[mi];
      out << ' ' << (m.has_judgments ? fmt_pct(m.utility.f1) : std::string())
          << " |";
      if (config.methods[mi].produces_ranking()) {
        out << ' ' << (m.has_ranking ? fmt_pct(m.ndcg.at(5)) : std::string())
            << " |";
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string render_sweep_csv(const ExperimentConfig& config,
                             SweepParameter parameter,
                             const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "param,value,method,utility_f1,ndcg@5,em,token_f1\n";
  const std::string name = sweep_parameter_name(parameter);
  for (const auto& row : rows) {
    for (size_t mi = 0; mi < config.methods.size(); ++mi) {
      const auto& m = row.report.methods[mi];
      out << name << ',' << row.value << ',' << m.label << ','
          << (m.has_judgments ? fmt_pct(m.utility.f1) : std::string()) << ','
          << (m.has_ranking ? fmt_pct(m.ndcg.at(5)) : std::string()) << ','
          << (m.has_answers ? fmt_pct(m.em) : std::string()) << ','
          << (m.has_answers ? fmt_pct(m.token_f1) : std::string()) << '\n';
    }
  }
  return out.str();
}

}  // namespace item
