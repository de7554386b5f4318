#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reljudge {

// Raised for malformed input files; line() is 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &msg, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// One gold judgment from a TREC qrels file.
struct QrelRecord {
  std::string topic_id;
  std::string doc_id;
  int gold_label = 0; // 0..3

  bool operator==(const QrelRecord &) const = default;
};

// A qrel joined with its query and passage text, ready for prompting.
struct JudgingUnit {
  QrelRecord qrel;
  std::string query_text;
  std::string passage_text;
};

struct LabelDistribution {
  std::array<std::uint64_t, 4> counts{};
  std::uint64_t total = 0;

  double zero_rate() const {
    return total ? static_cast<double>(counts[0]) / static_cast<double>(total)
                 : 0.0;
  }
};

// Parses TREC qrels: "topic_id iteration doc_id label" per non-blank line.
// The iteration column is parsed and discarded. Labels must be in {0,1,2,3}
// and (topic_id, doc_id) pairs must be unique.
std::vector<QrelRecord> parse_qrels(std::istream &in);

// Inverse of parse_qrels; writes iteration column as "0".
std::string serialize_qrels(const std::vector<QrelRecord> &records);

enum class TextMapFormat { tsv, jsonl };

using IdTextMap = std::unordered_map<std::string, std::string>;

// Parses an id -> text collection. tsv lines are "id<TAB>text" (split at the
// first tab); jsonl objects need string fields "id" and "text". Duplicate ids
// and invalid UTF-8 are errors.
IdTextMap parse_id_text_map(std::istream &in, TextMapFormat format);

struct JoinResult {
  std::vector<JudgingUnit> units;
  std::vector<QrelRecord> unresolved;
};

// Joins qrels with query and passage texts. Qrels whose topic or doc is
// missing, or whose texts are blank, land in `unresolved`; nothing is
// silently dropped and unit order follows qrel order.
JoinResult join_dataset(const std::vector<QrelRecord> &qrels,
                        const IdTextMap &queries, const IdTextMap &passages);

LabelDistribution label_distribution(const std::vector<QrelRecord> &qrels);

std::string_view trim_view(std::string_view s);
bool is_valid_utf8(std::string_view s);

} // namespace reljudge
