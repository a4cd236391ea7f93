#include "item/engine.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "item/common.hpp"
#include "item/metrics.hpp"

namespace item {

std::string method_to_string(Method method) {
  switch (method) {
    case Method::vanilla: return "vanilla";
    case Method::uj_expa: return "uj_expa";
    case Method::uj_impa: return "uj_impa";
    case Method::k_sampling: return "k_sampling";
    case Method::rankgpt: return "rankgpt";
    case Method::item_a_s: return "item_a_s";
    case Method::item_a_r: return "item_a_r";
    case Method::item_ar_s: return "item_ar_s";
    case Method::item_ar_r: return "item_ar_r";
  }
  return "vanilla";
}

Method method_from_string(const std::string& name) {
  static const std::map<std::string, Method> table = {
      {"vanilla", Method::vanilla},     {"uj_expa", Method::uj_expa},
      {"uj_impa", Method::uj_impa},     {"k_sampling", Method::k_sampling},
      {"rankgpt", Method::rankgpt},     {"item_a_s", Method::item_a_s},
      {"item_a_r", Method::item_a_r},   {"item_ar_s", Method::item_ar_s},
      {"item_ar_r", Method::item_ar_r},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown method: " + name);
  return it->second;
}

std::string stop_reason_to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::set_fixed_point: return "set_fixed_point";
    case StopReason::answer_converged: return "answer_converged";
  }
  return "max_iterations";
}

namespace {

StopReason stop_reason_from_string(const std::string& name) {
  if (name == "max_iterations") return StopReason::max_iterations;
  if (name == "set_fixed_point") return StopReason::set_fixed_point;
  if (name == "answer_converged") return StopReason::answer_converged;
  throw ConfigError("unknown stop reason: " + name);
}

UtilitySource source_from_string(const std::string& name) {
  if (name == "judged") return UtilitySource::judged;
  if (name == "topk_of_ranking") return UtilitySource::topk_of_ranking;
  if (name == "aggregated") return UtilitySource::aggregated;
  throw ConfigError("unknown utility source: " + name);
}

std::vector<std::string> ids_of(const std::vector<Passage>& passages) {
  std::vector<std::string> out;
  out.reserve(passages.size());
  for (const auto& p : passages) out.push_back(p.id);
  return out;
}

std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

UtilitySet topk_of(const Ranking& ranking, int k) {
  UtilitySet out;
  out.qid = ranking.qid;
  out.source = UtilitySource::topk_of_ranking;
  const size_t n = std::min<size_t>(ranking.order.size(), static_cast<size_t>(k));
  out.passage_ids.assign(ranking.order.begin(), ranking.order.begin() + n);
  std::sort(out.passage_ids.begin(), out.passage_ids.end());
  return out;
}

}  // namespace

void MethodSpec::validate() const {
  if (m < 1) throw ConfigError("m must be >= 1");
  if (topk_k < 1) throw ConfigError("topk_k must be >= 1");
  if (sampling_k < 1) throw ConfigError("sampling_k must be >= 1");
  if (rouge_threshold <= 0.0 || rouge_threshold > 1.0) {
    throw ConfigError("rouge threshold must be in (0, 1]");
  }
  const bool listwise_only =
      method == Method::k_sampling || method == Method::rankgpt ||
      method == Method::item_a_r || method == Method::item_ar_s ||
      method == Method::item_ar_r;
  if (listwise_only && input_mode != InputMode::listwise) {
    throw ConfigError(method_to_string(method) + " requires listwise input");
  }
}

bool MethodSpec::is_item() const {
  return method == Method::item_a_s || method == Method::item_a_r ||
         method == Method::item_ar_s || method == Method::item_ar_r;
}

bool MethodSpec::produces_judgments() const {
  return method != Method::rankgpt;
}

bool MethodSpec::produces_ranking() const {
  return method == Method::rankgpt || method == Method::item_a_r ||
         method == Method::item_ar_s || method == Method::item_ar_r;
}

bool MethodSpec::produces_answer() const {
  return method != Method::vanilla && method != Method::rankgpt;
}

std::string MethodSpec::label() const {
  std::string out = method_to_string(method);
  if (is_item()) {
    out += answer_kind == AnswerKind::explicit_answer ? "-expa" : "-impa";
    out += "-m" + std::to_string(m);
  }
  if (method == Method::k_sampling) out += "-k" + std::to_string(sampling_k);
  if (input_mode == InputMode::pointwise) out += "-pw";
  return out;
}

std::optional<StopReason> should_stop(const IterationState& current,
                                      const IterationState& previous,
                                      const MethodSpec& spec) {
  if (current.t >= spec.m) return StopReason::max_iterations;
  if (spec.stop_rule == StopRule::set_fixed_point) {
    if (current.utility.passage_ids == previous.utility.passage_ids) {
      return StopReason::set_fixed_point;
    }
  } else if (current.t >= 2 && current.answer && previous.answer) {
    if (rouge_l(current.answer->text, previous.answer->text) >
        spec.rouge_threshold) {
      return StopReason::answer_converged;
    }
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> sampling_orders(
    const std::vector<std::string>& ids, int count, std::uint64_t seed,
    const std::string& qid) {
  std::vector<std::vector<std::string>> out;
  out.push_back(ids);
  std::mt19937_64 rng(
      stable_hash64(std::to_string(seed) + "|" + qid + "|sampling"));
  for (int s = 0; s < count; ++s) {
    auto perm = ids;
    for (size_t i = perm.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng() % i);
      std::swap(perm[i - 1], perm[j]);
    }
    out.push_back(std::move(perm));
  }
  return out;
}

UtilitySet aggregate_votes(const std::vector<UtilitySet>& shots, int sampling_k,
                           const std::string& qid) {
  std::map<std::string, int> votes;
  for (const auto& shot : shots) {
    for (const auto& pid : shot.passage_ids) ++votes[pid];
  }
  UtilitySet out;
  out.qid = qid;
  out.source = UtilitySource::aggregated;
  for (const auto& [pid, count] : votes) {
    if (2 * count > sampling_k + 1) out.passage_ids.push_back(pid);
  }
  return out;
}

Engine::Engine(const TemplateSet& templates, ChatBackend& backend,
               ChatCache* cache, std::string model)
    : templates_(templates), backend_(backend), cache_(cache),
      model_(std::move(model)) {}

PromptOptions Engine::options_for(PromptKind kind, const MethodSpec& spec) const {
  PromptOptions options = PromptOptions::defaults_for(kind);
  if (spec.include_note) options.include_note = *spec.include_note;
  options.implicit_wording = spec.implicit_wording;
  options.answer_length_unit = spec.answer_length_unit;
  return options;
}

ChatResponse Engine::call(const std::vector<ChatMessage>& messages, int t,
                          const std::string& step, RunTrace& trace) {
  ChatRequest request{model_, messages, 0.0};
  ChatResponse response;
  try {
    response = cached_chat(backend_, cache_, request);
  } catch (const TransportError& e) {
    throw TransportError("qid " + trace.qid + " t=" + std::to_string(t) + " " +
                             step + ": " + e.what(),
                         e.request_digest);
  }
  ExchangeRecord rec;
  rec.t = t;
  rec.step = step;
  rec.digest = cache_key(request);
  rec.model = model_;
  rec.request = messages;
  rec.response = response.text;
  rec.cached = response.cached;
  rec.latency_ms = response.latency_ms;
  rec.backend = response.backend;
  trace.exchanges.push_back(std::move(rec));
  return response;
}

PseudoAnswer Engine::step_answer(const Question& question,
                                 const std::vector<Passage>& candidates,
                                 const UtilitySet& previous_set,
                                 AnswerKind kind, const MethodSpec& spec, int t,
                                 RunTrace& trace) {
  std::vector<Passage> selected;
  for (const auto& p : candidates) {
    if (std::binary_search(previous_set.passage_ids.begin(),
                           previous_set.passage_ids.end(), p.id)) {
      selected.push_back(p);
    }
  }
  const PromptKind pk = kind == AnswerKind::explicit_answer
                            ? PromptKind::answer_explicit
                            : PromptKind::answer_implicit;
  const auto messages = render(templates_, pk, question, selected, std::nullopt,
                               options_for(pk, spec));
  const auto response = call(messages, t, "answer", trace);
  PseudoAnswer answer;
  answer.qid = question.qid;
  answer.text = response.text;
  answer.kind = kind;
  answer.iteration = t;
  return answer;
}

UtilitySet Engine::step_judge(const Question& question,
                              const std::vector<Passage>& presented,
                              const std::optional<PseudoAnswer>& answer,
                              InputMode input_mode, const MethodSpec& spec,
                              int t, RunTrace& trace) {
  const auto presented_ids = ids_of(presented);
  std::optional<std::string> answer_text;
  if (answer) answer_text = answer->text;

  UtilitySet out;
  out.qid = question.qid;
  out.source = UtilitySource::judged;

  if (input_mode == InputMode::pointwise) {
    const PromptKind pk = PromptKind::utility_pointwise;
    for (const auto& p : presented) {
      const auto messages = render(templates_, pk, question, {p}, answer_text,
                                   options_for(pk, spec));
      const auto response = call(messages, t, "judge", trace);
      const auto verdict = parse_pointwise_verdict(response.text);
      if (verdict.ambiguous) ++trace.ambiguous_verdicts;
      if (verdict.value) out.passage_ids.push_back(p.id);
    }
    std::sort(out.passage_ids.begin(), out.passage_ids.end());
    return out;
  }

  const PromptKind pk = PromptKind::utility_listwise;
  auto messages = render(templates_, pk, question, presented, answer_text,
                         options_for(pk, spec));
  const auto response = call(messages, t, "judge", trace);
  try {
    return parse_utility_set(response.text, presented_ids, question.qid);
  } catch (const ReplyParseError&) {
    // One retry with a format reminder appended to the final turn.
    messages.back().content +=
        "\nReminder: reply using exactly the requested output format.";
    const auto retry = call(messages, t, "judge", trace);
    try {
      return parse_utility_set(retry.text, presented_ids, question.qid);
    } catch (const ReplyParseError& e) {
      ++trace.parse_errors;
      trace.errors.push_back("qid " + question.qid + " t=" + std::to_string(t) +
                             " judge: unparseable reply after retry: " +
                             e.what());
      return out;
    }
  }
}

Ranking Engine::step_rank(const Question& question,
                          const std::vector<Passage>& all_candidates,
                          const Ranking& previous,
                          const std::optional<PseudoAnswer>& answer,
                          PromptKind rank_kind, const MethodSpec& spec, int t,
                          RunTrace& trace) {
  std::map<std::string, const Passage*> by_id;
  for (const auto& p : all_candidates) by_id[p.id] = &p;
  std::vector<Passage> presented;
  presented.reserve(previous.order.size());
  for (const auto& pid : previous.order) presented.push_back(*by_id.at(pid));

  std::optional<std::string> answer_text;
  if (answer) answer_text = answer->text;

  const std::string step = rank_kind == PromptKind::rank_relevance
                               ? "rank_relevance"
                               : rank_kind == PromptKind::rank_utility
                                     ? "rank_utility"
                                     : "rankgpt";
  const auto messages = render(templates_, rank_kind, question, presented,
                               answer_text, options_for(rank_kind, spec));
  const auto response = call(messages, t, step, trace);
  try {
    return parse_ranking(response.text, previous.order, question.qid);
  } catch (const ReplyParseError& e) {
    ++trace.parse_errors;
    trace.errors.push_back("qid " + question.qid + " t=" + std::to_string(t) +
                           " " + step + ": " + e.what());
    return previous;
  }
}

RunTrace Engine::run(const Question& question,
                     const std::vector<Passage>& candidates,
                     const MethodSpec& spec) {
  spec.validate();
  switch (spec.method) {
    case Method::vanilla:
    case Method::uj_expa:
    case Method::uj_impa:
      return run_single_shot(question, candidates, spec);
    case Method::k_sampling:
      return run_k_sampling(question, candidates, spec);
    case Method::rankgpt: {
      RunTrace trace;
      run_rankgpt(question, candidates, spec, &trace);
      return trace;
    }
    default:
      return run_item(question, candidates, spec);
  }
}

namespace {

IterationState initial_state(const std::string& qid,
                             const std::vector<std::string>& candidate_ids) {
  IterationState s0;
  s0.t = 0;
  s0.utility.qid = qid;
  s0.utility.passage_ids = sorted_unique(candidate_ids);
  s0.utility.source = UtilitySource::judged;
  s0.ranking.qid = qid;
  s0.ranking.order = candidate_ids;
  return s0;
}

}  // namespace

RunTrace Engine::run_item(const Question& question,
                          const std::vector<Passage>& candidates,
                          const MethodSpec& spec) {
  RunTrace trace;
  trace.qid = question.qid;
  trace.method = spec;
  const auto candidate_ids = ids_of(candidates);
  trace.states.push_back(initial_state(question.qid, candidate_ids));

  std::map<std::string, const Passage*> by_id;
  for (const auto& p : candidates) by_id[p.id] = &p;
  auto passages_in = [&](const std::vector<std::string>& order) {
    std::vector<Passage> out;
    out.reserve(order.size());
    for (const auto& pid : order) out.push_back(*by_id.at(pid));
    return out;
  };

  for (int t = 1; t <= spec.m; ++t) {
    const IterationState prev = trace.states.back();
    IterationState cur;
    cur.t = t;
    if (prev.utility.passage_ids.empty()) {
      cur.notes.push_back("previous utility set empty; question-only answer prompt");
    }
    cur.answer = step_answer(question, candidates, prev.utility,
                             spec.answer_kind, spec, t, trace);

    switch (spec.method) {
      case Method::item_a_s:
        // Judged list stays the original retrieval order every iteration.
        cur.ranking = prev.ranking;
        cur.utility = step_judge(question, candidates, cur.answer,
                                 spec.input_mode, spec, t, trace);
        break;
      case Method::item_a_r:
        cur.ranking = step_rank(question, candidates, prev.ranking, cur.answer,
                                PromptKind::rank_utility, spec, t, trace);
        cur.utility = topk_of(cur.ranking, spec.topk_k);
        break;
      case Method::item_ar_s:
        cur.ranking = step_rank(question, candidates, prev.ranking, cur.answer,
                                PromptKind::rank_relevance, spec, t, trace);
        cur.utility = step_judge(question, passages_in(cur.ranking.order),
                                 cur.answer, spec.input_mode, spec, t, trace);
        break;
      case Method::item_ar_r: {
        cur.ranking = step_rank(question, candidates, prev.ranking, cur.answer,
                                PromptKind::rank_relevance, spec, t, trace);
        cur.utility_ranking =
            step_rank(question, candidates, cur.ranking, cur.answer,
                      PromptKind::rank_utility, spec, t, trace);
        cur.utility = topk_of(*cur.utility_ranking, spec.topk_k);
        break;
      }
      default:
        throw ConfigError("run_item called with non-iterative method " +
                          method_to_string(spec.method));
    }

    cur.stopped_reason = should_stop(cur, prev, spec);
    const bool stop = cur.stopped_reason.has_value();
    trace.states.push_back(std::move(cur));
    if (stop) break;
  }

  for (auto it = trace.states.rbegin(); it != trace.states.rend(); ++it) {
    if (it->answer) {
      trace.final_answer = it->answer->text;
      break;
    }
  }
  return trace;
}

RunTrace Engine::run_single_shot(const Question& question,
                                 const std::vector<Passage>& candidates,
                                 const MethodSpec& spec) {
  RunTrace trace;
  trace.qid = question.qid;
  trace.method = spec;
  const auto candidate_ids = ids_of(candidates);
  trace.states.push_back(initial_state(question.qid, candidate_ids));
  const IterationState& s0 = trace.states.front();

  IterationState s1;
  s1.t = 1;
  s1.ranking = s0.ranking;
  if (spec.method != Method::vanilla) {
    const AnswerKind kind = spec.method == Method::uj_impa
                                ? AnswerKind::implicit_answer
                                : AnswerKind::explicit_answer;
    s1.answer = step_answer(question, candidates, s0.utility, kind, spec, 1,
                            trace);
  }
  s1.utility = step_judge(question, candidates, s1.answer, spec.input_mode,
                          spec, 1, trace);
  if (s1.answer) trace.final_answer = s1.answer->text;
  trace.states.push_back(std::move(s1));
  return trace;
}

RunTrace Engine::run_k_sampling(const Question& question,
                                const std::vector<Passage>& candidates,
                                const MethodSpec& spec) {
  RunTrace trace;
  trace.qid = question.qid;
  trace.method = spec;
  const auto candidate_ids = ids_of(candidates);
  trace.states.push_back(initial_state(question.qid, candidate_ids));

  std::map<std::string, const Passage*> by_id;
  for (const auto& p : candidates) by_id[p.id] = &p;

  const auto orders =
      sampling_orders(candidate_ids, spec.sampling_k, spec.seed, question.qid);
  std::vector<UtilitySet> shots;
  std::optional<PseudoAnswer> original_order_answer;
  for (size_t s = 0; s < orders.size(); ++s) {
    std::vector<Passage> permuted;
    permuted.reserve(orders[s].size());
    for (const auto& pid : orders[s]) permuted.push_back(*by_id.at(pid));

    UtilitySet full;
    full.qid = question.qid;
    full.passage_ids = sorted_unique(orders[s]);
    const auto answer = step_answer(question, permuted, full,
                                    AnswerKind::explicit_answer, spec,
                                    static_cast<int>(s) + 1, trace);
    if (s == 0) original_order_answer = answer;
    shots.push_back(step_judge(question, permuted, answer, spec.input_mode,
                               spec, static_cast<int>(s) + 1, trace));
  }

  IterationState s1;
  s1.t = 1;
  s1.ranking = trace.states.front().ranking;
  s1.answer = original_order_answer;
  s1.utility = aggregate_votes(shots, spec.sampling_k, question.qid);
  for (size_t s = 0; s < shots.size(); ++s) {
    std::string ids;
    for (const auto& pid : shots[s].passage_ids) {
      if (!ids.empty()) ids += ",";
      ids += pid;
    }
    s1.notes.push_back("shot " + std::to_string(s) + " votes: " + ids);
  }
  if (s1.answer) trace.final_answer = s1.answer->text;
  trace.states.push_back(std::move(s1));
  return trace;
}

Ranking Engine::run_rankgpt(const Question& question,
                            const std::vector<Passage>& candidates,
                            const MethodSpec& spec, RunTrace* trace) {
  RunTrace local;
  RunTrace& tr = trace != nullptr ? *trace : local;
  tr.qid = question.qid;
  tr.method = spec;
  const auto candidate_ids = ids_of(candidates);
  tr.states.push_back(initial_state(question.qid, candidate_ids));

  IterationState s1;
  s1.t = 1;
  s1.utility = tr.states.front().utility;
  s1.ranking = step_rank(question, candidates, tr.states.front().ranking,
                         std::nullopt, PromptKind::rank_rankgpt_baseline, spec,
                         1, tr);
  Ranking out = s1.ranking;
  tr.states.push_back(std::move(s1));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization (schema 1)

namespace {

nlohmann::json utility_set_to_json(const UtilitySet& set) {
  return {{"ids", set.passage_ids},
          {"source", utility_source_to_string(set.source)}};
}

UtilitySet utility_set_from_json(const nlohmann::json& j,
                                 const std::string& qid) {
  UtilitySet out;
  out.qid = qid;
  out.passage_ids = j.at("ids").get<std::vector<std::string>>();
  out.source = source_from_string(j.at("source").get<std::string>());
  return out;
}

std::string answer_kind_to_string(AnswerKind kind) {
  return kind == AnswerKind::explicit_answer ? "explicit" : "implicit";
}

AnswerKind answer_kind_from_string(const std::string& name) {
  if (name == "explicit") return AnswerKind::explicit_answer;
  if (name == "implicit") return AnswerKind::implicit_answer;
  throw ConfigError("unknown answer kind: " + name);
}

}  // namespace

nlohmann::json method_spec_to_json(const MethodSpec& spec) {
  nlohmann::json j;
  j["method"] = method_to_string(spec.method);
  j["input_mode"] =
      spec.input_mode == InputMode::listwise ? "listwise" : "pointwise";
  j["answer_kind"] = answer_kind_to_string(spec.answer_kind);
  j["m"] = spec.m;
  j["topk_k"] = spec.topk_k;
  j["sampling_k"] = spec.sampling_k;
  j["stop_rule"] = spec.stop_rule == StopRule::set_fixed_point
                       ? "set_fixed_point"
                       : "answer_rouge";
  j["rouge_threshold"] = spec.rouge_threshold;
  j["seed"] = spec.seed;
  j["include_note"] =
      spec.include_note ? nlohmann::json(*spec.include_note) : nlohmann::json();
  j["implicit_wording"] =
      spec.implicit_wording == ImplicitWording::which ? "which" : "what";
  j["answer_length_unit"] =
      spec.answer_length_unit == LengthUnit::words ? "words" : "sentences";
  return j;
}

MethodSpec method_spec_from_json(const nlohmann::json& j) {
  MethodSpec spec;
  spec.method = method_from_string(j.at("method").get<std::string>());
  spec.input_mode = j.at("input_mode").get<std::string>() == "pointwise"
                        ? InputMode::pointwise
                        : InputMode::listwise;
  spec.answer_kind =
      answer_kind_from_string(j.at("answer_kind").get<std::string>());
  spec.m = j.at("m").get<int>();
  spec.topk_k = j.at("topk_k").get<int>();
  spec.sampling_k = j.at("sampling_k").get<int>();
  spec.stop_rule = j.at("stop_rule").get<std::string>() == "answer_rouge"
                       ? StopRule::answer_rouge
                       : StopRule::set_fixed_point;
  spec.rouge_threshold = j.at("rouge_threshold").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("include_note") && !j["include_note"].is_null()) {
    spec.include_note = j["include_note"].get<bool>();
  }
  spec.implicit_wording = j.at("implicit_wording").get<std::string>() == "what"
                              ? ImplicitWording::what
                              : ImplicitWording::which;
  spec.answer_length_unit =
      j.at("answer_length_unit").get<std::string>() == "sentences"
          ? LengthUnit::sentences
          : LengthUnit::words;
  return spec;
}

nlohmann::json trace_to_json(const RunTrace& trace) {
  nlohmann::json j;
  j["schema"] = 1;
  j["qid"] = trace.qid;
  j["method"] = method_spec_to_json(trace.method);
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : trace.states) {
    nlohmann::json js;
    js["t"] = s.t;
    js["utility"] = utility_set_to_json(s.utility);
    if (s.answer) {
      js["answer"] = {{"text", s.answer->text},
                      {"kind", answer_kind_to_string(s.answer->kind)},
                      {"iteration", s.answer->iteration}};
    } else {
      js["answer"] = nullptr;
    }
    js["ranking"] = s.ranking.order;
    js["utility_ranking"] = s.utility_ranking
                                ? nlohmann::json(s.utility_ranking->order)
                                : nlohmann::json();
    js["stopped_reason"] =
        s.stopped_reason
            ? nlohmann::json(stop_reason_to_string(*s.stopped_reason))
            : nlohmann::json();
    js["notes"] = s.notes;
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);

  nlohmann::json exchanges = nlohmann::json::array();
  for (const auto& e : trace.exchanges) {
    nlohmann::json je;
    je["t"] = e.t;
    je["step"] = e.step;
    je["digest"] = e.digest;
    je["model"] = e.model;
    nlohmann::json request = nlohmann::json::array();
    for (const auto& m : e.request) {
      request.push_back(
          {{"role", role_to_string(m.role)}, {"content", m.content}});
    }
    je["request"] = std::move(request);
    je["response"] = e.response;
    je["cached"] = e.cached;
    je["latency_ms"] = e.latency_ms;
    je["backend"] = e.backend;
    exchanges.push_back(std::move(je));
  }
  j["exchanges"] = std::move(exchanges);
  j["final_answer"] =
      trace.final_answer ? nlohmann::json(*trace.final_answer) : nlohmann::json();
  j["errors"] = trace.errors;
  j["parse_errors"] = trace.parse_errors;
  j["ambiguous_verdicts"] = trace.ambiguous_verdicts;
  return j;
}

RunTrace trace_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema").get<int>() != 1) {
    throw DataError("unsupported trace schema");
  }
  RunTrace trace;
  trace.qid = j.at("qid").get<std::string>();
  trace.method = method_spec_from_json(j.at("method"));
  for (const auto& js : j.at("states")) {
    IterationState s;
    s.t = js.at("t").get<int>();
    s.utility = utility_set_from_json(js.at("utility"), trace.qid);
    if (!js.at("answer").is_null()) {
      PseudoAnswer a;
      a.qid = trace.qid;
      a.text = js["answer"].at("text").get<std::string>();
      a.kind = answer_kind_from_string(js["answer"].at("kind").get<std::string>());
      a.iteration = js["answer"].at("iteration").get<int>();
      s.answer = std::move(a);
    }
    s.ranking.qid = trace.qid;
    s.ranking.order = js.at("ranking").get<std::vector<std::string>>();
    if (!js.at("utility_ranking").is_null()) {
      Ranking r;
      r.qid = trace.qid;
      r.order = js["utility_ranking"].get<std::vector<std::string>>();
      s.utility_ranking = std::move(r);
    }
    if (!js.at("stopped_reason").is_null()) {
      s.stopped_reason =
          stop_reason_from_string(js["stopped_reason"].get<std::string>());
    }
    s.notes = js.at("notes").get<std::vector<std::string>>();
    trace.states.push_back(std::move(s));
  }
  for (const auto& je : j.at("exchanges")) {
    ExchangeRecord e;
    e.t = je.at("t").get<int>();
    e.step = je.at("step").get<std::string>();
    e.digest = je.at("digest").get<std::string>();
    e.model = je.at("model").get<std::string>();
    for (const auto& jm : je.at("request")) {
      ChatMessage m;
      const std::string role = jm.at("role").get<std::string>();
      m.role = role == "system" ? Role::system
                                : role == "assistant" ? Role::assistant
                                                      : Role::user;
      m.content = jm.at("content").get<std::string>();
      e.request.push_back(std::move(m));
    }
    e.response = je.at("response").get<std::string>();
    e.cached = je.at("cached").get<bool>();
    e.latency_ms = je.at("latency_ms").get<int>();
    e.backend = je.at("backend").get<std::string>();
    trace.exchanges.push_back(std::move(e));
  }
  if (!j.at("final_answer").is_null()) {
    trace.final_answer = j["final_answer"].get<std::string>();
  }
  trace.errors = j.at("errors").get<std::vector<std::string>>();
  trace.parse_errors = j.at("parse_errors").get<int>();
  trace.ambiguous_verdicts = j.at("ambiguous_verdicts").get<int>();
  return trace;
}

void save_traces(const std::string& path, const std::vector<RunTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace file: " + path);
  for (const auto& trace : traces) out << trace_to_json(trace).dump() << '\n';
}

std::vector<RunTrace> load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path);
  std::vector<RunTrace> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad trace JSON");
    }
    out.push_back(trace_from_json(j));
  }
  return out;
}

}  // namespace item
