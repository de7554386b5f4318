#include "reljudge/corpus.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>

namespace reljudge {

std::string_view trim_view(std::string_view s) {
  const char *ws = " \t\r\n\f\v";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (b0 < 0x80) {
      ++i;
      continue;
    } else if ((b0 & 0xe0) == 0xc0) {
      len = 2;
      cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
      len = 3;
      cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) {
      return false;
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xc0) != 0x80) {
        return false;
      }
      cp = (cp << 6) | (b & 0x3f);
    }
    // reject overlong encodings, surrogates and out-of-range code points
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10ffff ||
        (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += len;
  }
  return true;
}

namespace {

bool parse_label(std::string_view field, int &out) {
  const char *first = field.data();
  const char *last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

} // namespace

std::vector<QrelRecord> parse_qrels(std::istream &in) {
  std::vector<QrelRecord> records;
  // (topic_id, doc_id) -> first line seen, for duplicate reporting
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) {
      continue;
    }
    std::istringstream fields(line);
    std::string topic, iteration, doc, label_txt, extra;
    if (!(fields >> topic >> iteration >> doc >> label_txt)) {
      throw ParseError("expected 4 whitespace-separated fields, got fewer",
                       line_no);
    }
    if (fields >> extra) {
      throw ParseError("expected 4 whitespace-separated fields, got more",
                       line_no);
    }
    int label = 0;
    if (!parse_label(label_txt, label)) {
      throw ParseError("relevance label is not an integer: '" + label_txt +
                           "'",
                       line_no);
    }
    if (label < 0 || label > 3) {
      throw ParseError("relevance label out of range 0..3: " + label_txt,
                       line_no);
    }
    std::string key = topic;
    key += '\x1f';
    key += doc;
    auto [it, inserted] = seen.emplace(std::move(key), line_no);
    if (!inserted) {
      throw ParseError("duplicate (topic_id, doc_id) pair '" + topic + "', '" +
                           doc + "'; first seen at line " +
                           std::to_string(it->second),
                       line_no);
    }
    records.push_back(QrelRecord{std::move(topic), std::move(doc), label});
  }
  return records;
}

std::string serialize_qrels(const std::vector<QrelRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    out += r.topic_id;
    out += " 0 ";
    out += r.doc_id;
    out += ' ';
    out += std::to_string(r.gold_label);
    out += '\n';
  }
  return out;
}

IdTextMap parse_id_text_map(std::istream &in, TextMapFormat format) {
  IdTextMap map;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) {
      continue;
    }
    std::string id;
    std::string text;
    if (format == TextMapFormat::tsv) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ParseError("missing tab separator", line_no);
      }
      id = line.substr(0, tab);
      text = line.substr(tab + 1);
      if (id.empty()) {
        throw ParseError("empty id field", line_no);
      }
      if (!is_valid_utf8(text)) {
        throw ParseError("text is not valid UTF-8", line_no);
      }
    } else {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
      }
      if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
          !obj["id"].is_string() || !obj["text"].is_string()) {
        throw ParseError("object must have string fields \"id\" and \"text\"",
                         line_no);
      }
      id = obj["id"].get<std::string>();
      text = obj["text"].get<std::string>();
    }
    auto [it, inserted] = first_line.emplace(id, line_no);
    if (!inserted) {
      throw ParseError("duplicate id '" + id + "'; first seen at line " +
                           std::to_string(it->second),
                       line_no);
    }
    map.emplace(std::move(id), std::move(text));
  }
  return map;
}

JoinResult join_dataset(const std::vector<QrelRecord> &qrels,
                        const IdTextMap &queries, const IdTextMap &passages) {
  JoinResult result;
  result.units.reserve(qrels.size());
  for (const auto &qrel : qrels) {
    const auto q = queries.find(qrel.topic_id);
    const auto p = passages.find(qrel.doc_id);
    if (q == queries.end() || p == passages.end() ||
        trim_view(q->second).empty() || trim_view(p->second).empty()) {
      result.unresolved.push_back(qrel);
      continue;
    }
    result.units.push_back(JudgingUnit{qrel, q->second, p->second});
  }
  return result;
}

LabelDistribution label_distribution(const std::vector<QrelRecord> &qrels) {
  LabelDistribution dist;
  for (const auto &r : qrels) {
    if (r.gold_label < 0 || r.gold_label > 3) {
      throw std::out_of_range("gold label out of range 0..3: " +
                              std::to_string(r.gold_label));
    }
    ++dist.counts[static_cast<std::size_t>(r.gold_label)];
  }
  dist.total = qrels.size();
  return dist;
}

} // namespace reljudge
