#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "item/chat.hpp"
#include "item/corpus.hpp"
#include "item/parsing.hpp"
#include "item/prompting.hpp"

namespace item {

enum class Method {
  vanilla,
  uj_expa,
  uj_impa,
  k_sampling,
  rankgpt,
  item_a_s,
  item_a_r,
  item_ar_s,
  item_ar_r,
};

enum class InputMode { listwise, pointwise };
enum class StopRule { set_fixed_point, answer_rouge };
enum class StopReason { max_iterations, set_fixed_point, answer_converged };

std::string method_to_string(Method method);
Method method_from_string(const std::string& name);
std::string stop_reason_to_string(StopReason reason);

struct MethodSpec {
  Method method = Method::item_a_s;
  InputMode input_mode = InputMode::listwise;
  AnswerKind answer_kind = AnswerKind::explicit_answer;
  int m = 3;
  int topk_k = 5;
  int sampling_k = 5;
  StopRule stop_rule = StopRule::set_fixed_point;
  double rouge_threshold = 0.9;
  std::uint64_t seed = 0;
  std::optional<bool> include_note;  // unset = kind-dependent default
  ImplicitWording implicit_wording = ImplicitWording::which;
  LengthUnit answer_length_unit = LengthUnit::words;

  void validate() const;  // throws ConfigError
  bool is_item() const;
  bool produces_judgments() const;
  bool produces_ranking() const;
  bool produces_answer() const;
  // Stable identifier used in trace files and report rows.
  std::string label() const;
};

struct IterationState {
  int t = 0;
  UtilitySet utility;
  std::optional<PseudoAnswer> answer;
  Ranking ranking;
  std::optional<Ranking> utility_ranking;  // second ranking of item_ar_r
  std::optional<StopReason> stopped_reason;
  std::vector<std::string> notes;
};

struct ExchangeRecord {
  int t = 0;
  std::string step;  // answer | judge | rank_relevance | rank_utility | rankgpt
  std::string digest;
  std::string model;
  std::vector<ChatMessage> request;
  std::string response;
  bool cached = false;
  int latency_ms = 0;
  std::string backend;
};

struct RunTrace {
  std::string qid;
  MethodSpec method;
  std::vector<IterationState> states;
  std::vector<ExchangeRecord> exchanges;
  std::optional<std::string> final_answer;
  std::vector<std::string> errors;
  int parse_errors = 0;
  int ambiguous_verdicts = 0;
};

// Stop checks run after each iteration: the iteration cap wins, then the
// configured rule (set fixed point, or answer convergence from t >= 2).
std::optional<StopReason> should_stop(const IterationState& current,
                                      const IterationState& previous,
                                      const MethodSpec& spec);

// The original order plus `count` seeded Fisher-Yates shuffles.
std::vector<std::vector<std::string>> sampling_orders(
    const std::vector<std::string>& ids, int count, std::uint64_t seed,
    const std::string& qid);

// Strict majority over k+1 vote sets; exact ties are excluded.
UtilitySet aggregate_votes(const std::vector<UtilitySet>& shots,
                           int sampling_k, const std::string& qid);

class Engine {
 public:
  Engine(const TemplateSet& templates, ChatBackend& backend, ChatCache* cache,
         std::string model);

  // Dispatches on spec.method.
  RunTrace run(const Question& question, const std::vector<Passage>& candidates,
               const MethodSpec& spec);

  RunTrace run_item(const Question& question,
                    const std::vector<Passage>& candidates,
                    const MethodSpec& spec);
  RunTrace run_single_shot(const Question& question,
                           const std::vector<Passage>& candidates,
                           const MethodSpec& spec);
  RunTrace run_k_sampling(const Question& question,
                          const std::vector<Passage>& candidates,
                          const MethodSpec& spec);
  Ranking run_rankgpt(const Question& question,
                      const std::vector<Passage>& candidates,
                      const MethodSpec& spec, RunTrace* trace = nullptr);

  PseudoAnswer step_answer(const Question& question,
                           const std::vector<Passage>& candidates,
                           const UtilitySet& previous_set, AnswerKind kind,
                           const MethodSpec& spec, int t, RunTrace& trace);
  UtilitySet step_judge(const Question& question,
                        const std::vector<Passage>& presented,
                        const std::optional<PseudoAnswer>& answer,
                        InputMode input_mode, const MethodSpec& spec, int t,
                        RunTrace& trace);
  Ranking step_rank(const Question& question,
                    const std::vector<Passage>& all_candidates,
                    const Ranking& previous, const std::optional<PseudoAnswer>& answer,
                    PromptKind rank_kind, const MethodSpec& spec, int t,
                    RunTrace& trace);

 private:
  ChatResponse call(const std::vector<ChatMessage>& messages, int t,
                    const std::string& step, RunTrace& trace);
  PromptOptions options_for(PromptKind kind, const MethodSpec& spec) const;

  const TemplateSet& templates_;
  ChatBackend& backend_;
  ChatCache* cache_;
  std::string model_;
};

// Line-oriented trace persistence, schema version 1.
nlohmann::json trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const nlohmann::json& j);
void save_traces(const std::string& path, const std::vector<RunTrace>& traces);
std::vector<RunTrace> load_traces(const std::string& path);

nlohmann::json method_spec_to_json(const MethodSpec& spec);
MethodSpec method_spec_from_json(const nlohmann::json& j);

}  // namespace item
