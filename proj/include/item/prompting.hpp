#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "item/chat.hpp"
#include "item/corpus.hpp"

namespace item {

enum class PromptKind {
  utility_listwise,
  utility_pointwise,
  answer_explicit,
  answer_implicit,
  rank_relevance,
  rank_utility,
  rank_rankgpt_baseline,
};

std::string prompt_kind_to_string(PromptKind kind);

enum class ImplicitWording { which, what };
enum class LengthUnit { words, sentences };

struct PromptOptions {
  bool include_note = false;
  ImplicitWording implicit_wording = ImplicitWording::which;
  LengthUnit answer_length_unit = LengthUnit::words;
  std::string passage_id_style = "Passage-";

  // Pointwise judgments default to carrying the note; everything else not.
  static PromptOptions defaults_for(PromptKind kind);
};

extern const char* const kNoteSentence;

// Instruction wording lives in template files so it can be revised without
// touching code. Placeholders: {{count}}, {{id_style}}, {{wording}}, {{unit}}.
class TemplateSet {
 public:
  static TemplateSet load(const std::string& dir);

  const std::string& raw(PromptKind kind) const;
  std::string instruction(PromptKind kind, size_t passage_count,
                          const PromptOptions& options) const;

 private:
  std::map<PromptKind, std::string> templates_;
};

std::string expected_output_directive(PromptKind kind,
                                      const PromptOptions& options = {});

// Structured request metadata read by mock oracles and stripped before any
// HTTP transmission.
struct PromptMarker {
  std::string kind;
  std::string qid;
  std::vector<std::string> pids;  // presentation order
  std::optional<std::string> answer;
};

std::string marker_block(const PromptMarker& marker);
std::optional<PromptMarker> extract_marker(const ChatRequest& request);
std::string strip_markers(std::string_view content);

// Renders the full message sequence for one model call. Listwise kinds use
// one user/assistant round per passage followed by a final user turn holding
// the question, optional reference answer, optional note, and the output
// directive. Pointwise uses a single user turn over exactly one passage.
std::vector<ChatMessage> render(const TemplateSet& templates, PromptKind kind,
                                const Question& question,
                                const std::vector<Passage>& passages,
                                const std::optional<std::string>& pseudo_answer,
                                const PromptOptions& options);

}  // namespace item
