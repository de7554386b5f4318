#pragma once

#include "reljudge/config.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace reljudge {

// Runs the configured pipeline over the joined dataset and writes
// judgments.jsonl, manifest.json and pseudo-qrels.txt into out_dir.
// Returns a process exit code.
int cmd_judge(const RunConfig &config);

struct EvalOptions {
  std::filesystem::path judgments_path;
  std::filesystem::path qrels_path;
  std::optional<std::filesystem::path> manifest_path; // default: sibling
  std::optional<std::filesystem::path> report_path;   // default: sibling
  std::string run_id; // default: judgments file's directory name
};

// Scores a judgments file against gold qrels: agreement + cost report as
// JSON plus a Table-2-shaped text table on stdout.
int cmd_eval(const EvalOptions &options);

struct ReportOptions {
  std::vector<std::filesystem::path> report_paths;
  std::filesystem::path csv_path = "report.csv";
  std::filesystem::path points_path = "points.csv";
};

// Combines eval reports into one CSV plus a (cost, kappa, alpha) point list
// for external plotting.
int cmd_report(const ReportOptions &options);

} // namespace reljudge
