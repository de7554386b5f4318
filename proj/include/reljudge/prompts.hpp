#pragma once

#include "reljudge/corpus.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace reljudge {

enum class TemplateId { normal, relevant, binary };

std::string_view template_name(TemplateId id); // "normal"|"relevant"|"binary"
TemplateId template_from_name(std::string_view name); // throws on unknown

class TemplateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct PromptTemplate {
  TemplateId id = TemplateId::normal;
  std::string body; // contains {query} and {passage} exactly once each
  int score_min = 0;
  int score_max = 3;
};

// The built-in judging prompts. Bodies are frozen; the golden copies live
// under tests/golden/ and the two must stay byte-identical.
const PromptTemplate &builtin_template(TemplateId id);

// Escape hatch: load a replacement body for `id` from disk. The sidecar
// "<body_path>.json" must declare {"score_min","score_max"} matching the
// id's canonical range, and the body must carry both placeholders.
PromptTemplate load_template_file(TemplateId id,
                                  const std::filesystem::path &body_path);

std::string template_sha256(const PromptTemplate &tmpl);

struct RenderedPrompt {
  TemplateId template_id = TemplateId::normal;
  std::string text;
  std::string content_hash; // stable digest of (template_id, text)
};

// Substitutes {query} and {passage} in a single pass; substituted content is
// never rescanned, so placeholder-looking unit text cannot corrupt the
// result. Throws TemplateError if the template does not carry each
// placeholder exactly once.
RenderedPrompt render_prompt(const PromptTemplate &tmpl,
                             const JudgingUnit &unit);

enum class ScoreParseStatus { ok, unparseable, out_of_range };

struct ScoreParseResult {
  ScoreParseStatus status = ScoreParseStatus::unparseable;
  int score = -1;
  std::string raw_response; // filled on failure, for logging

  bool ok() const { return status == ScoreParseStatus::ok; }
};

// Locates the last "##final score:" marker (case-insensitive, tolerant of
// internal whitespace), skips whitespace and parses one integer. The range
// check stays strict.
ScoreParseResult parse_final_score(std::string_view response, int score_min,
                                   int score_max);

} // namespace reljudge
