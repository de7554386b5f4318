#include "reljudge/io.hpp"

#include <fstream>
#include <sstream>

namespace reljudge::io {

namespace {

nlohmann::json outcome_to_json(const StageOutcome &outcome) {
  nlohmann::json obj;
  if (outcome.score) {
    obj["score"] = *outcome.score;
  }
  obj["response"] = response_to_json(outcome.response);
  return obj;
}

StageOutcome outcome_from_json(const nlohmann::json &obj) {
  StageOutcome outcome;
  outcome.response = response_from_json(obj.at("response"));
  if (obj.contains("score")) {
    outcome.score = obj["score"].get<int>();
  }
  return outcome;
}

std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  return out;
}

} // namespace

nlohmann::json judgment_to_json(const Judgment &judgment) {
  nlohmann::json obj;
  obj["topic_id"] = judgment.topic_id;
  obj["doc_id"] = judgment.doc_id;
  obj["gold_label"] = judgment.gold_label;
  if (judgment.stage1) {
    obj["stage1"] = outcome_to_json(*judgment.stage1);
  }
  if (judgment.stage2) {
    obj["stage2"] = outcome_to_json(*judgment.stage2);
  }
  if (judgment.final_label) {
    obj["final_label"] = *judgment.final_label;
  }
  obj["status"] = judgment.ok() ? "ok" : "errored";
  if (!judgment.error_detail.empty()) {
    obj["error_detail"] = judgment.error_detail;
  }
  return obj;
}

Judgment judgment_from_json(const nlohmann::json &obj) {
  Judgment judgment;
  judgment.topic_id = obj.at("topic_id").get<std::string>();
  judgment.doc_id = obj.at("doc_id").get<std::string>();
  judgment.gold_label = obj.at("gold_label").get<int>();
  if (obj.contains("stage1")) {
    judgment.stage1 = outcome_from_json(obj["stage1"]);
  }
  if (obj.contains("stage2")) {
    judgment.stage2 = outcome_from_json(obj["stage2"]);
  }
  if (obj.contains("final_label")) {
    judgment.final_label = obj["final_label"].get<int>();
  }
  if (obj.contains("error_detail")) {
    judgment.error_detail = obj["error_detail"].get<std::string>();
  }
  const auto status = obj.at("status").get<std::string>();
  if ((status == "ok") != judgment.ok()) {
    throw std::runtime_error("judgment status does not match final_label");
  }
  return judgment;
}

void write_judgments_jsonl(const std::filesystem::path &path,
                           const std::vector<Judgment> &judgments) {
  auto out = open_out(path);
  for (const auto &judgment : judgments) {
    out << judgment_to_json(judgment).dump() << '\n';
  }
}

std::vector<Judgment> read_judgments_jsonl(
    const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open judgments file: " + path.string());
  }
  std::vector<Judgment> judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) {
      continue;
    }
    try {
      judgments.push_back(judgment_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception &e) {
      throw ParseError(std::string("bad judgment record: ") + e.what(),
                       line_no);
    }
  }
  return judgments;
}

nlohmann::json manifest_to_json(const RunManifest &manifest) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto &stage : manifest.stages) {
    stages.push_back({
        {"model_id", stage.model_id},
        {"template", stage.template_name},
        {"template_sha256", stage.template_sha256},
        {"temperature", stage.temperature},
        {"price_input_per_mtok", stage.price_input_per_mtok},
        {"price_output_per_mtok", stage.price_output_per_mtok},
    });
  }
  return nlohmann::json{
      {"schema_version", manifest.schema_version},
      {"backend", manifest.backend},
      {"topology", std::string(topology_name(manifest.topology))},
      {"stages", stages},
      {"seed", manifest.seed},
      {"concurrency", manifest.concurrency},
      {"counts",
       {{"units", manifest.counts.units},
        {"ok", manifest.counts.ok},
        {"errored", manifest.counts.errored},
        {"stage2_invocations", manifest.counts.stage2_invocations},
        {"stage1_zero", manifest.counts.stage1_zero},
        {"unresolved", manifest.counts.unresolved}}},
      {"stage1_zero_rate", manifest.stage1_zero_rate},
      {"wall_ms", manifest.wall_ms},
  };
}

RunManifest manifest_from_json(const nlohmann::json &obj) {
  RunManifest manifest;
  manifest.schema_version = obj.at("schema_version").get<std::string>();
  manifest.backend = obj.at("backend").get<std::string>();
  manifest.topology =
      topology_from_name(obj.at("topology").get<std::string>());
  for (const auto &stage : obj.at("stages")) {
    manifest.stages.push_back(StageManifest{
        stage.at("model_id").get<std::string>(),
        stage.at("template").get<std::string>(),
        stage.at("template_sha256").get<std::string>(),
        stage.at("temperature").get<double>(),
        stage.at("price_input_per_mtok").get<double>(),
        stage.at("price_output_per_mtok").get<double>(),
    });
  }
  manifest.seed = obj.at("seed").get<std::uint64_t>();
  manifest.concurrency = obj.at("concurrency").get<int>();
  const auto &counts = obj.at("counts");
  manifest.counts.units = counts.at("units").get<std::uint64_t>();
  manifest.counts.ok = counts.at("ok").get<std::uint64_t>();
  manifest.counts.errored = counts.at("errored").get<std::uint64_t>();
  manifest.counts.stage2_invocations =
      counts.at("stage2_invocations").get<std::uint64_t>();
  manifest.counts.stage1_zero = counts.at("stage1_zero").get<std::uint64_t>();
  manifest.counts.unresolved = counts.at("unresolved").get<std::uint64_t>();
  manifest.stage1_zero_rate = obj.at("stage1_zero_rate").get<double>();
  manifest.wall_ms = obj.at("wall_ms").get<std::uint64_t>();
  return manifest;
}

void write_manifest(const std::filesystem::path &path,
                    const RunManifest &manifest) {
  auto out = open_out(path);
  out << manifest_to_json(manifest).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + path.string());
  }
  nlohmann::json obj;
  in >> obj;
  return manifest_from_json(obj);
}

void write_pseudo_qrels(const std::filesystem::path &path,
                        const std::vector<Judgment> &judgments) {
  auto out = open_out(path);
  for (const auto &judgment : judgments) {
    if (judgment.ok()) {
      out << judgment.topic_id << " 0 " << judgment.doc_id << ' '
          << *judgment.final_label << '\n';
    }
  }
}

namespace {

nlohmann::json metric_or_null(const std::optional<double> &value) {
  if (value) {
    return *value;
  }
  return nullptr;
}

} // namespace

nlohmann::json agreement_to_json(const metrics::AgreementReport &report) {
  return nlohmann::json{
      {"n_ok", report.n_ok},
      {"n_errored", report.n_errored},
      {"binary_kappa", metric_or_null(report.binary_kappa)},
      {"fourscale_kappa", metric_or_null(report.fourscale_kappa)},
      {"alpha_nominal", metric_or_null(report.alpha_nominal)},
      {"alpha_interval", metric_or_null(report.alpha_interval)},
      {"confusion", report.confusion},
      {"binary_confusion", report.binary_confusion},
  };
}

nlohmann::json cost_to_json(const cost::CostReport &report) {
  return nlohmann::json{
      {"modeled_cost_per_mtok", report.modeled_cost_per_mtok},
      {"stage1_zero_rate", report.stage1_zero_rate},
      {"observed_input_tokens",
       {{"stage1", report.observed_input_tokens[0]},
        {"stage2", report.observed_input_tokens[1]}}},
      {"observed_output_tokens",
       {{"stage1", report.observed_output_tokens[0]},
        {"stage2", report.observed_output_tokens[1]}}},
      {"observed_cost_usd", report.observed_cost_usd},
      {"token_estimate_source",
       std::string(
           cost::token_estimate_source_name(report.token_estimate_source))},
  };
}

void write_text_file(const std::filesystem::path &path,
                     const std::string &content) {
  auto out = open_out(path);
  out << content;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

} // namespace reljudge::io
