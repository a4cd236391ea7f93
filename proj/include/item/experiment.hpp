#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "item/config.hpp"
#include "item/corpus.hpp"
#include "item/engine.hpp"
#include "item/metrics.hpp"
#include "item/oracle.hpp"

namespace item {

struct PreparedDataset {
  PassageStore passages;
  std::vector<Question> questions;  // filtered, evaluation order
  std::vector<GradedJudgment> judgments;
  std::vector<UtilityLabel> labels;
  LabelSet label_set;
  std::map<std::string, CandidateList> candidates;
  std::map<std::string, std::map<std::string, int>> grades;  // qid -> pid -> grade
  std::vector<std::string> warnings;
};

PreparedDataset prepare_dataset(const ExperimentConfig& config);

std::unique_ptr<ChatBackend> make_backend(const ExperimentConfig& config,
                                          const PreparedDataset& dataset);

struct MethodSummary {
  std::string label;
  int question_count = 0;
  bool has_judgments = false;
  SetPRF utility;
  bool has_ranking = false;
  std::map<int, double> ndcg;
  bool has_answers = false;
  double em = 0.0;
  double token_f1 = 0.0;
  int parse_errors = 0;
  int ambiguous_verdicts = 0;
  int step_errors = 0;
};

struct QuestionRow {
  std::string label;
  std::string qid;
  std::optional<SetPRF> utility;
  std::map<int, double> ndcg;
  std::optional<double> em;
  std::optional<double> token_f1;
};

struct EvalReport {
  std::uint64_t seed = 0;
  int question_count = 0;
  std::vector<MethodSummary> methods;
  std::vector<QuestionRow> rows;
  std::vector<std::string> dataset_warnings;
  std::vector<std::string> failures;
  // Volatile run facts, logged but kept out of the rendered report bytes.
  double cache_hit_rate = 0.0;
  std::uint64_t backend_calls = 0;
  size_t cache_io_warnings = 0;
};

inline const std::vector<int>& ndcg_cutoffs() {
  static const std::vector<int> ks = {1, 3, 5, 10, 20};
  return ks;
}

// Per-method traces indexed [method][question]; absent on question failure.
using TraceMatrix = std::vector<std::vector<std::optional<RunTrace>>>;

EvalReport evaluate_traces(const TraceMatrix& traces,
                           const std::vector<MethodSpec>& methods,
                           const PreparedDataset& dataset, std::uint64_t seed);

struct ExperimentResult {
  EvalReport report;
  TraceMatrix traces;
  int exit_code = 0;  // 0 clean, 1 partial failures
};

// Runs every configured method over every question, persists traces, the
// per-question CSV, report.json, report.md, and report.csv under output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

enum class ReportFormat { markdown, csv };

std::string render_report_text(const EvalReport& report, ReportFormat format);
void render_report(const EvalReport& report, ReportFormat format,
                   const std::string& path);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

enum class SweepParameter { iteration_cap, topk, rouge_p };

SweepParameter sweep_parameter_from_string(const std::string& name);

struct SweepRow {
  std::string value;
  EvalReport report;
};

// One full run per value; runs share the configured cache. Values apply to
// every method the parameter is meaningful for; it must touch at least one.
std::vector<SweepRow> sweep(const ExperimentConfig& config,
                            SweepParameter parameter,
                            const std::vector<std::string>& values);

std::string render_sweep_markdown(const ExperimentConfig& config,
                                  SweepParameter parameter,
                                  const std::vector<SweepRow>& rows);
std::string render_sweep_csv(const ExperimentConfig& config,
                             SweepParameter parameter,
                             const std::vector<SweepRow>& rows);

}  // namespace item
