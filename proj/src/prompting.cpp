#include "item/prompting.hpp"

#include <fstream>
#include <sstream>

#include "item/common.hpp"

namespace item {

const char* const kNoteSentence =
    "The reference answer may not be the correct answer, but it provides a "
    "pattern of the correct answer.";

namespace {

constexpr const char* kMarkerOpen = "<!-- meta ";
constexpr const char* kMarkerClose = " -->";

std::string replace_all(std::string text, std::string_view from,
                        std::string_view to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

const char* template_file(PromptKind kind) {
  switch (kind) {
    case PromptKind::utility_listwise: return "utility_listwise.txt";
    case PromptKind::utility_pointwise: return "utility_pointwise.txt";
    case PromptKind::answer_explicit: return "answer_explicit.txt";
    case PromptKind::answer_implicit: return "answer_implicit.txt";
    case PromptKind::rank_relevance: return "rank_relevance.txt";
    case PromptKind::rank_utility: return "rank_utility.txt";
    case PromptKind::rank_rankgpt_baseline: return "rank_rankgpt.txt";
  }
  return "";
}

bool is_pointwise(PromptKind kind) {
  return kind == PromptKind::utility_pointwise;
}

bool is_answer_kind(PromptKind kind) {
  return kind == PromptKind::answer_explicit ||
         kind == PromptKind::answer_implicit;
}

}  // namespace

std::string prompt_kind_to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::utility_listwise: return "utility_listwise";
    case PromptKind::utility_pointwise: return "utility_pointwise";
    case PromptKind::answer_explicit: return "answer_explicit";
    case PromptKind::answer_implicit: return "answer_implicit";
    case PromptKind::rank_relevance: return "rank_relevance";
    case PromptKind::rank_utility: return "rank_utility";
    case PromptKind::rank_rankgpt_baseline: return "rank_rankgpt_baseline";
  }
  return "unknown";
}

PromptOptions PromptOptions::defaults_for(PromptKind kind) {
  PromptOptions options;
  options.include_note = is_pointwise(kind);
  return options;
}

TemplateSet TemplateSet::load(const std::string& dir) {
  TemplateSet set;
  for (PromptKind kind :
       {PromptKind::utility_listwise, PromptKind::utility_pointwise,
        PromptKind::answer_explicit, PromptKind::answer_implicit,
        PromptKind::rank_relevance, PromptKind::rank_utility,
        PromptKind::rank_rankgpt_baseline}) {
    const std::string path = dir + "/" + template_file(kind);
    std::ifstream in(path);
    if (!in) throw ConfigError("missing prompt template: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
      text.pop_back();
    }
    set.templates_[kind] = std::move(text);
  }
  return set;
}

const std::string& TemplateSet::raw(PromptKind kind) const {
  return templates_.at(kind);
}

std::string TemplateSet::instruction(PromptKind kind, size_t passage_count,
                                     const PromptOptions& options) const {
  std::string text = raw(kind);
  text = replace_all(std::move(text), "{{count}}",
                     std::to_string(passage_count));
  text = replace_all(std::move(text), "{{id_style}}", options.passage_id_style);
  text = replace_all(
      std::move(text), "{{wording}}",
      options.implicit_wording == ImplicitWording::which ? "which" : "what");
  text = replace_all(
      std::move(text), "{{unit}}",
      options.answer_length_unit == LengthUnit::words ? "words" : "sentences");
  return text;
}

std::string expected_output_directive(PromptKind kind,
                                      const PromptOptions& options) {
  const std::string& id = options.passage_id_style;
  const std::string unit =
      options.answer_length_unit == LengthUnit::words ? "words" : "sentences";
  switch (kind) {
    case PromptKind::utility_listwise:
      return "Identify the passages that have utility in answering the "
             "question. Output format: \"Utility: " + id + "i, " + id +
             "j, ...\" listing only those passages, or \"Utility: none\" if "
             "no passage has utility. Do not output anything else.";
    case PromptKind::utility_pointwise:
      return "Does the passage have utility in answering the question? "
             "Output exactly one word: Yes or No.";
    case PromptKind::answer_explicit:
      return "Answer the question in a few " + unit + ".";
    case PromptKind::answer_implicit:
      return std::string("State ") +
             (options.implicit_wording == ImplicitWording::which ? "which"
                                                                 : "what") +
             " information is necessary to answer the question, in a few " +
             unit + ". Do not answer the question directly.";
    case PromptKind::rank_relevance:
      return "Rank all passages in descending order of relevance to the "
             "question. Output format: [i] > [j] > ..., including every "
             "passage identifier exactly once. Do not output anything else.";
    case PromptKind::rank_utility:
      return "Rank all passages in descending order of their utility in "
             "answering the question. Output format: [i] > [j] > ..., "
             "including every passage identifier exactly once. Do not output "
             "anything else.";
    case PromptKind::rank_rankgpt_baseline:
      return "Rank the passages above based on their relevance to the search "
             "query. All passages should be included and listed using "
             "identifiers, in descending order of relevance. Output format: "
             "[i] > [j] > ... Only respond with the ranking results, do not "
             "say any word or explain.";
  }
  return "";
}

std::string marker_block(const PromptMarker& marker) {
  nlohmann::json j;
  j["kind"] = marker.kind;
  j["qid"] = marker.qid;
  j["pids"] = marker.pids;
  if (marker.answer) j["answer"] = *marker.answer;
  return std::string(kMarkerOpen) + j.dump() + kMarkerClose;
}

std::optional<PromptMarker> extract_marker(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend();
       ++it) {
    const std::string& content = it->content;
    const size_t open = content.find(kMarkerOpen);
    if (open == std::string::npos) continue;
    const size_t payload = open + std::string(kMarkerOpen).size();
    const size_t close = content.find(kMarkerClose, payload);
    if (close == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(
        content.substr(payload, close - payload), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    PromptMarker marker;
    marker.kind = j.value("kind", "");
    marker.qid = j.value("qid", "");
    if (j.contains("pids")) {
      for (const auto& p : j["pids"]) marker.pids.push_back(p.get<std::string>());
    }
    if (j.contains("answer")) marker.answer = j["answer"].get<std::string>();
    return marker;
  }
  return std::nullopt;
}

std::string strip_markers(std::string_view content) {
  std::string out(content);
  size_t open;
  while ((open = out.find(kMarkerOpen)) != std::string::npos) {
    const size_t close = out.find(kMarkerClose, open);
    if (close == std::string::npos) break;
    size_t begin = open;
    if (begin > 0 && out[begin - 1] == '\n') --begin;
    out.erase(begin, close + std::string(kMarkerClose).size() - begin);
  }
  return out;
}

std::vector<ChatMessage> render(const TemplateSet& templates, PromptKind kind,
                                const Question& question,
                                const std::vector<Passage>& passages,
                                const std::optional<std::string>& pseudo_answer,
                                const PromptOptions& options) {
  if (is_pointwise(kind)) {
    if (passages.size() != 1) {
      throw ConfigError("pointwise prompts take exactly one passage");
    }
  } else if (!is_answer_kind(kind) && passages.empty()) {
    throw ConfigError("listwise prompts need at least one passage");
  }

  PromptMarker marker;
  marker.kind = prompt_kind_to_string(kind);
  marker.qid = question.qid;
  for (const auto& p : passages) marker.pids.push_back(p.id);
  marker.answer = pseudo_answer;

  const std::string question_label =
      kind == PromptKind::rank_rankgpt_baseline ? "Search Query: " : "Question: ";

  std::vector<ChatMessage> messages;
  messages.push_back(
      {Role::system, templates.instruction(kind, passages.size(), options)});

  if (is_pointwise(kind)) {
    std::ostringstream turn;
    turn << "Passage: " << passages.front().text << '\n'
         << question_label << question.text << '\n';
    if (pseudo_answer) turn << "Reference answer: " << *pseudo_answer << '\n';
    if (options.include_note) turn << kNoteSentence << '\n';
    turn << expected_output_directive(kind, options) << '\n'
         << marker_block(marker);
    messages.push_back({Role::user, turn.str()});
    return messages;
  }

  for (size_t i = 0; i < passages.size(); ++i) {
    const std::string label =
        options.passage_id_style + std::to_string(i + 1);
    messages.push_back({Role::user, label + ": " + passages[i].text});
    messages.push_back({Role::assistant, "Received " + label + "."});
  }

  std::ostringstream turn;
  turn << question_label << question.text << '\n';
  if (pseudo_answer) turn << "Reference answer: " << *pseudo_answer << '\n';
  if (options.include_note) turn << kNoteSentence << '\n';
  turn << expected_output_directive(kind, options) << '\n'
       << marker_block(marker);
  messages.push_back({Role::user, turn.str()});
  return messages;
}

}  // namespace item
