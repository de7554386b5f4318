#pragma once

#include "reljudge/cost.hpp"
#include "reljudge/metrics.hpp"
#include "reljudge/pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace reljudge::io {

inline constexpr std::string_view kSchemaVersion = "1";

nlohmann::json judgment_to_json(const Judgment &judgment);
Judgment judgment_from_json(const nlohmann::json &obj);

void write_judgments_jsonl(const std::filesystem::path &path,
                           const std::vector<Judgment> &judgments);
std::vector<Judgment> read_judgments_jsonl(const std::filesystem::path &path);

nlohmann::json manifest_to_json(const RunManifest &manifest);
RunManifest manifest_from_json(const nlohmann::json &obj);
void write_manifest(const std::filesystem::path &path,
                    const RunManifest &manifest);
RunManifest read_manifest(const std::filesystem::path &path);

// TREC-style "topic_id 0 doc_id final_label" lines, ok judgments only.
void write_pseudo_qrels(const std::filesystem::path &path,
                        const std::vector<Judgment> &judgments);

nlohmann::json agreement_to_json(const metrics::AgreementReport &report);
nlohmann::json cost_to_json(const cost::CostReport &report);

void write_text_file(const std::filesystem::path &path,
                     const std::string &content);
std::string read_text_file(const std::filesystem::path &path);

} // namespace reljudge::io
