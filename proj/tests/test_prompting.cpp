#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "item/common.hpp"
#include "item/prompting.hpp"
#include "prompt_snapshots.hpp"

using namespace item;

namespace {

const Question kQuestion = prompt_snapshots::question();

std::vector<Passage> three_passages() { return prompt_snapshots::passages(); }

TemplateSet templates() { return TemplateSet::load(ITEM_TEMPLATE_DIR); }

std::string serialize(const std::vector<ChatMessage>& messages) {
  return prompt_snapshots::serialize(messages);
}

}  // namespace

TEST_CASE("listwise render shape: system + per-passage rounds + final user turn") {
  const auto messages =
      render(templates(), PromptKind::utility_listwise, kQuestion,
             three_passages(), std::nullopt,
             PromptOptions::defaults_for(PromptKind::utility_listwise));
  REQUIRE(messages.size() == 8);  // 1 system + 3*(user, assistant) + 1 user
  CHECK(messages[0].role == Role::system);
  for (size_t i = 1; i <= 6; ++i) {
    CHECK(messages[i].role == (i % 2 == 1 ? Role::user : Role::assistant));
  }
  CHECK(messages[1].content.rfind("Passage-1: ", 0) == 0);
  CHECK(messages[2].content == "Received Passage-1.");
  CHECK(messages.back().role == Role::user);
  CHECK(messages.back().content.find("Question: ") != std::string::npos);
  CHECK(messages.back().content.find("Utility:") != std::string::npos);
}

TEST_CASE("pointwise render shape and passage-count preconditions") {
  const auto ps = three_passages();
  const auto messages =
      render(templates(), PromptKind::utility_pointwise, kQuestion, {ps[0]},
             std::nullopt, PromptOptions::defaults_for(PromptKind::utility_pointwise));
  REQUIRE(messages.size() == 2);
  CHECK(messages[1].content.find("Passage: ") != std::string::npos);

  CHECK_THROWS_AS(render(templates(), PromptKind::utility_pointwise, kQuestion,
                         ps, std::nullopt, {}),
                  ConfigError);
  CHECK_THROWS_AS(render(templates(), PromptKind::utility_listwise, kQuestion,
                         {}, std::nullopt, {}),
                  ConfigError);
}

TEST_CASE("pointwise default carries the note sentence verbatim") {
  const auto messages =
      render(templates(), PromptKind::utility_pointwise, kQuestion,
             {three_passages()[0]}, "Some reference answer",
             PromptOptions::defaults_for(PromptKind::utility_pointwise));
  CHECK(messages[1].content.find(
            "The reference answer may not be the correct answer, but it "
            "provides a pattern of the correct answer.") != std::string::npos);
}

TEST_CASE("answer kinds accept zero passages") {
  const auto messages =
      render(templates(), PromptKind::answer_explicit, kQuestion, {},
             std::nullopt, PromptOptions::defaults_for(PromptKind::answer_explicit));
  REQUIRE(messages.size() == 2);
  CHECK(messages[1].content.find("Question: ") != std::string::npos);
}

TEST_CASE("implicit wording toggles which/what") {
  auto options = PromptOptions::defaults_for(PromptKind::answer_implicit);
  auto messages = render(templates(), PromptKind::answer_implicit, kQuestion,
                         {three_passages()[0]}, std::nullopt, options);
  CHECK(messages.back().content.find("which information is necessary") !=
        std::string::npos);
  options.implicit_wording = ImplicitWording::what;
  messages = render(templates(), PromptKind::answer_implicit, kQuestion,
                    {three_passages()[0]}, std::nullopt, options);
  CHECK(messages.back().content.find("what information is necessary") !=
        std::string::npos);
}

TEST_CASE("output directives carry the fixed formats") {
  CHECK(expected_output_directive(PromptKind::utility_listwise)
            .find("Utility:") != std::string::npos);
  CHECK(expected_output_directive(PromptKind::rank_relevance).find("[i] > [j]") !=
        std::string::npos);
  CHECK(expected_output_directive(PromptKind::rank_rankgpt_baseline)
            .find("[i] > [j]") != std::string::npos);
  const auto pointwise = expected_output_directive(PromptKind::utility_pointwise);
  CHECK(pointwise.find("Yes") != std::string::npos);
  CHECK(pointwise.find("No") != std::string::npos);
  PromptOptions sentences;
  sentences.answer_length_unit = LengthUnit::sentences;
  CHECK(expected_output_directive(PromptKind::answer_explicit, sentences)
            .find("sentences") != std::string::npos);
}

TEST_CASE("rendering is pure") {
  const auto a = render(templates(), PromptKind::utility_listwise, kQuestion,
                        three_passages(), "ans",
                        PromptOptions::defaults_for(PromptKind::utility_listwise));
  const auto b = render(templates(), PromptKind::utility_listwise, kQuestion,
                        three_passages(), "ans",
                        PromptOptions::defaults_for(PromptKind::utility_listwise));
  CHECK(serialize(a) == serialize(b));
}

TEST_CASE("every passage id appears exactly once in the rendered dialogue") {
  const auto messages =
      render(templates(), PromptKind::utility_listwise, kQuestion,
             three_passages(), std::nullopt,
             PromptOptions::defaults_for(PromptKind::utility_listwise));
  const std::string all = serialize(messages);
  for (const auto& p : three_passages()) {
    size_t count = 0;
    size_t pos = 0;
    while ((pos = all.find("\"" + p.id + "\"", pos)) != std::string::npos) {
      ++count;
      pos += p.id.size();
    }
    CHECK(count == 1);  // marker block only; prompts use positional labels
  }
  for (size_t i = 1; i <= 3; ++i) {
    const std::string label = "Passage-" + std::to_string(i) + ": ";
    CHECK(all.find(label) != std::string::npos);
    CHECK(all.find(label) == all.rfind(label));
  }
}

TEST_CASE("toggling the note changes exactly one sentence of the final turn") {
  auto base = PromptOptions::defaults_for(PromptKind::utility_listwise);
  auto noted = base;
  noted.include_note = true;
  const auto without =
      render(templates(), PromptKind::utility_listwise, kQuestion,
             three_passages(), "ref answer", base);
  const auto with = render(templates(), PromptKind::utility_listwise, kQuestion,
                           three_passages(), "ref answer", noted);
  REQUIRE(without.size() == with.size());
  for (size_t i = 0; i + 1 < without.size(); ++i) {
    CHECK(without[i].content == with[i].content);
  }
  const std::string inserted = std::string(kNoteSentence) + "\n";
  std::string stripped = with.back().content;
  const size_t pos = stripped.find(inserted);
  REQUIRE(pos != std::string::npos);
  stripped.erase(pos, inserted.size());
  CHECK(stripped == without.back().content);
}

TEST_CASE("markers round-trip and never reach the wire") {
  const auto messages = render(templates(), PromptKind::rank_utility, kQuestion,
                               three_passages(), "the answer",
                               PromptOptions::defaults_for(PromptKind::rank_utility));
  ChatRequest request{"m", messages, 0.0};
  const auto marker = extract_marker(request);
  REQUIRE(marker.has_value());
  CHECK(marker->kind == "rank_utility");
  CHECK(marker->qid == "q42");
  CHECK(marker->pids == std::vector<std::string>{"pA", "pB", "pC"});
  REQUIRE(marker->answer.has_value());
  CHECK(*marker->answer == "the answer");

  const std::string stripped = strip_markers(messages.back().content);
  CHECK(stripped.find("<!-- meta") == std::string::npos);
  CHECK(stripped.find("the answer") != std::string::npos);
  // Content without markers passes through unchanged.
  CHECK(strip_markers("plain text") == "plain text");
}

TEST_CASE("prompt snapshots match the committed fixtures byte for byte") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(ITEM_FIXTURE_DIR) / "prompts";
  const bool update = std::getenv("ITEM_UPDATE_FIXTURES") != nullptr;
  if (update) fs::create_directories(dir);

  for (const auto& snap : prompt_snapshots::matrix()) {
    CAPTURE(snap.name);
    const auto messages = render(templates(), snap.kind, kQuestion,
                                 snap.passages, snap.answer, snap.options);
    const std::string rendered = serialize(messages);
    const fs::path file = dir / (snap.name + ".txt");
    if (update) {
      std::ofstream out(file, std::ios::binary);
      out << rendered;
      continue;
    }
    std::ifstream in(file, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture; regenerate with "
                               "ITEM_UPDATE_FIXTURES=1");
    std::ostringstream buf;
    buf << in.rdbuf();
    REQUIRE(buf.str() == rendered);
  }
}
