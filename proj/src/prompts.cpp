#include "reljudge/prompts.hpp"

#include "reljudge/digest.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace reljudge {

namespace {

constexpr std::string_view kNormalBody =
    R"(Given a query and a passage, you must provide a score on an integer scale of 0 to 3 with the following meanings:
0 = represent that the passage has nothing to do with the query,
1 = represents that the passage seems related to the query but does not answer it,
2 = represents that the passage has some answer for the query, but the answer may be a bit unclear, or hidden amongst extraneous information and
3 = represents that the passage is dedicated to the query and contains the exact answer.
Important Instruction: Assign category 1 if the passage is somewhat related to the topic but not completely, category 2 if passage presents something very important related to the entire topic but also has some extra information and category 3 if the passage only and entirely refers to the topic. If none of the above satisfies give it category 0.
Query: {query}
Passage: {passage}
Split this problem into steps:
Consider the underlying intent of the search.
Measure how well the content matches a likely intent of the query (M).
Measure how trustworthy the passage is (T).
Consider the aspects above and the relative importance of each, and decide on a final score (O). Final score must be an integer value only.
Do not provide any code in result. Provide each score in the format of: ##final score: score without providing any reasoning.)";

constexpr std::string_view kRelevantBody =
    R"(Given a query and a passage, you must provide a score on an integer scale of 1 to 3 with the following meanings:
1 = represents that the passage seems related to the query but does not answer it,
2 = represents that the passage has some answer for the query, but the answer may be a bit unclear, or hidden amongst extraneous information and
3 = represents that the passage is dedicated to the query and contains the exact answer.
Important Instruction: Assign category 1 if the passage is somewhat related to the topic but not completely, category 2 if passage presents something very important related to the entire topic but also has some extra information and category 3 if the passage only and entirely refers to the topic.
Query: {query}
Passage: {passage}
Split this problem into steps:
Consider the underlying intent of the search.
Measure how well the content matches a likely intent of the query (M).
Measure how trustworthy the passage is (T).
Consider the aspects above and the relative importance of each, and decide on a final score (O). Final score must be an integer value only.
Do not provide any code in result. Provide each score in the format of: ##final score: score without providing any reasoning.)";

constexpr std::string_view kBinaryBody =
    R"(Given a query and a passage, you must provide a score on an integer scale of 0 to 1 with the following meanings:
0 = represent that the passage has nothing to do with the query,
1 = represents that the passage has something to do with the query.
Important Instruction: Assign category 1 if the passage is relevant to the topic. If it is not relevant to the topic, assign category 0.
Query: {query}
Passage: {passage}
Split this problem into steps:
Consider the underlying intent of the search.
Measure how well the content matches a likely intent of the query (M).
Measure how trustworthy the passage is (T).
Consider the aspects above and the relative importance of each, and decide on a final score (0). The final score must be an integer value only.
Do not provide any code in the result. Provide each score in the format of: ##final score: score without providing any reasoning.)";

constexpr std::string_view kQueryPlaceholder = "{query}";
constexpr std::string_view kPassagePlaceholder = "{passage}";

std::size_t count_occurrences(std::string_view haystack,
                              std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

void validate_template(const PromptTemplate &tmpl) {
  if (count_occurrences(tmpl.body, kQueryPlaceholder) != 1 ||
      count_occurrences(tmpl.body, kPassagePlaceholder) != 1) {
    throw TemplateError(
        std::string("template '") + std::string(template_name(tmpl.id)) +
        "' is corrupt: must contain {query} and {passage} exactly once each");
  }
}

std::pair<int, int> canonical_range(TemplateId id) {
  switch (id) {
  case TemplateId::normal:
    return {0, 3};
  case TemplateId::relevant:
    return {1, 3};
  case TemplateId::binary:
    return {0, 1};
  }
  throw TemplateError("unknown template id");
}

} // namespace

std::string_view template_name(TemplateId id) {
  switch (id) {
  case TemplateId::normal:
    return "normal";
  case TemplateId::relevant:
    return "relevant";
  case TemplateId::binary:
    return "binary";
  }
  throw TemplateError("unknown template id");
}

TemplateId template_from_name(std::string_view name) {
  if (name == "normal") {
    return TemplateId::normal;
  }
  if (name == "relevant") {
    return TemplateId::relevant;
  }
  if (name == "binary") {
    return TemplateId::binary;
  }
  throw TemplateError("unknown template name: '" + std::string(name) + "'");
}

const PromptTemplate &builtin_template(TemplateId id) {
  static const PromptTemplate normal{TemplateId::normal,
                                     std::string(kNormalBody), 0, 3};
  static const PromptTemplate relevant{TemplateId::relevant,
                                       std::string(kRelevantBody), 1, 3};
  static const PromptTemplate binary{TemplateId::binary,
                                     std::string(kBinaryBody), 0, 1};
  switch (id) {
  case TemplateId::normal:
    return normal;
  case TemplateId::relevant:
    return relevant;
  case TemplateId::binary:
    return binary;
  }
  throw TemplateError("unknown template id");
}

PromptTemplate load_template_file(TemplateId id,
                                  const std::filesystem::path &body_path) {
  std::ifstream body_in(body_path, std::ios::binary);
  if (!body_in) {
    throw TemplateError("cannot open template file: " + body_path.string());
  }
  std::ostringstream body;
  body << body_in.rdbuf();

  const auto sidecar_path = body_path.string() + ".json";
  std::ifstream sidecar_in(sidecar_path);
  if (!sidecar_in) {
    throw TemplateError("cannot open template sidecar: " + sidecar_path);
  }
  nlohmann::json sidecar;
  try {
    sidecar_in >> sidecar;
  } catch (const nlohmann::json::exception &e) {
    throw TemplateError("invalid template sidecar " + sidecar_path + ": " +
                        e.what());
  }
  if (!sidecar.contains("score_min") || !sidecar.contains("score_max")) {
    throw TemplateError("template sidecar must declare score_min/score_max: " +
                        sidecar_path);
  }
  const int score_min = sidecar["score_min"].get<int>();
  const int score_max = sidecar["score_max"].get<int>();
  const auto [want_min, want_max] = canonical_range(id);
  if (score_min != want_min || score_max != want_max) {
    // the score range drives routing, so a custom body may not change it
    throw TemplateError("sidecar range [" + std::to_string(score_min) + "," +
                        std::to_string(score_max) + "] does not match the '" +
                        std::string(template_name(id)) + "' range [" +
                        std::to_string(want_min) + "," +
                        std::to_string(want_max) + "]");
  }

  PromptTemplate tmpl{id, body.str(), score_min, score_max};
  validate_template(tmpl);
  return tmpl;
}

std::string template_sha256(const PromptTemplate &tmpl) {
  return sha256_hex(tmpl.body);
}

RenderedPrompt render_prompt(const PromptTemplate &tmpl,
                             const JudgingUnit &unit) {
  validate_template(tmpl);

  std::string text;
  text.reserve(tmpl.body.size() + unit.query_text.size() +
               unit.passage_text.size());
  std::size_t i = 0;
  const std::string_view body = tmpl.body;
  while (i < body.size()) {
    if (body.compare(i, kQueryPlaceholder.size(), kQueryPlaceholder) == 0) {
      text += unit.query_text;
      i += kQueryPlaceholder.size();
    } else if (body.compare(i, kPassagePlaceholder.size(),
                            kPassagePlaceholder) == 0) {
      text += unit.passage_text;
      i += kPassagePlaceholder.size();
    } else {
      text += body[i++];
    }
  }

  RenderedPrompt rendered;
  rendered.template_id = tmpl.id;
  rendered.text = std::move(text);
  std::string hash_input(template_name(tmpl.id));
  hash_input += '\x1f';
  hash_input += rendered.text;
  rendered.content_hash = sha256_hex(hash_input);
  return rendered;
}

namespace {

bool imatch(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) ==
         std::tolower(static_cast<unsigned char>(b));
}

// Matches "##final score:" starting at `pos`, allowing whitespace between
// tokens. Returns the index one past the colon, or npos.
std::size_t match_marker(std::string_view s, std::size_t pos) {
  constexpr auto npos = std::string_view::npos;
  std::size_t i = pos;
  if (i + 1 >= s.size() || s[i] != '#' || s[i + 1] != '#') {
    return npos;
  }
  i += 2;
  const auto skip_ws = [&] {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
      ++i;
    }
  };
  const auto word = [&](std::string_view w) {
    skip_ws();
    if (s.size() - i < w.size()) {
      return false;
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!imatch(s[i + k], w[k])) {
        return false;
      }
    }
    i += w.size();
    return true;
  };
  if (!word("final") || !word("score")) {
    return npos;
  }
  skip_ws();
  if (i >= s.size() || s[i] != ':') {
    return npos;
  }
  return i + 1;
}

} // namespace

ScoreParseResult parse_final_score(std::string_view response, int score_min,
                                   int score_max) {
  constexpr auto npos = std::string_view::npos;
  std::size_t after_marker = npos;
  for (std::size_t i = 0; i + 1 < response.size(); ++i) {
    if (response[i] != '#') {
      continue;
    }
    if (const auto end = match_marker(response, i); end != npos) {
      after_marker = end;
    }
  }

  ScoreParseResult result;
  if (after_marker == npos) {
    result.status = ScoreParseStatus::unparseable;
    result.raw_response = std::string(response);
    return result;
  }

  std::size_t i = after_marker;
  while (i < response.size() &&
         std::isspace(static_cast<unsigned char>(response[i]))) {
    ++i;
  }
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(response.data() + i, response.data() + response.size(),
                      value);
  if (ec == std::errc::invalid_argument || ptr == response.data() + i) {
    result.status = ScoreParseStatus::unparseable;
    result.raw_response = std::string(response);
    return result;
  }
  if (ec == std::errc::result_out_of_range || value < score_min ||
      value > score_max) {
    result.status = ScoreParseStatus::out_of_range;
    result.raw_response = std::string(response);
    return result;
  }
  result.status = ScoreParseStatus::ok;
  result.score = value;
  return result;
}

} // namespace reljudge
