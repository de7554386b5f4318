#include "reljudge/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Multi-stage LLM relevance judging, agreement metrics and "
               "cost reporting"};
  app.require_subcommand(1);

  // judge
  std::string config_path;
  std::string backend_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> concurrency_override;
  std::string cache_dir_override;
  std::string out_dir_override;

  auto *judge = app.add_subcommand(
      "judge", "Run a judging pipeline over a qrels/queries/passages dataset");
  judge->add_option("--config", config_path, "Run config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  judge->add_option("--backend", backend_override,
                    "Override backend: live|cached|replay|synthetic");
  judge->add_option("--seed", seed_override, "Override run seed");
  judge->add_option("--concurrency", concurrency_override,
                    "Override unit-level parallelism");
  judge->add_option("--cache-dir", cache_dir_override,
                    "Override response cache directory");
  judge->add_option("--out-dir", out_dir_override,
                    "Override output directory");

  // eval
  reljudge::EvalOptions eval_options;
  std::string eval_judgments, eval_qrels, eval_manifest, eval_report,
      eval_run_id;
  auto *eval = app.add_subcommand(
      "eval", "Score a judgments file against gold qrels");
  eval->add_option("--judgments", eval_judgments, "judgments.jsonl path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--qrels", eval_qrels, "Gold qrels path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest,
                   "Run manifest (default: sibling manifest.json)");
  eval->add_option("--out", eval_report,
                   "Report JSON output (default: sibling report.json)");
  eval->add_option("--run-id", eval_run_id,
                   "Run id recorded in the report (default: run dir name)");

  // report
  reljudge::ReportOptions report_options;
  std::vector<std::string> report_inputs;
  std::string report_csv = "report.csv";
  std::string report_points = "points.csv";
  auto *report = app.add_subcommand(
      "report", "Combine eval reports into CSV and plot-ready points");
  report->add_option("reports", report_inputs, "Report JSON files")
      ->required()
      ->expected(-1);
  report->add_option("--out-csv", report_csv, "Combined CSV output");
  report->add_option("--out-points", report_points,
                     "Cost-vs-accuracy points CSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (judge->parsed()) {
      auto config = reljudge::load_run_config(config_path);
      if (!backend_override.empty()) {
        config.backend = reljudge::backend_from_name(backend_override);
      }
      if (seed_override) {
        config.seed = *seed_override;
      }
      if (concurrency_override) {
        config.concurrency = *concurrency_override;
      }
      if (!cache_dir_override.empty()) {
        config.cache_dir = cache_dir_override;
      }
      if (!out_dir_override.empty()) {
        config.out_dir = out_dir_override;
      }
      return reljudge::cmd_judge(config);
    }
    if (eval->parsed()) {
      eval_options.judgments_path = eval_judgments;
      eval_options.qrels_path = eval_qrels;
      if (!eval_manifest.empty()) {
        eval_options.manifest_path = eval_manifest;
      }
      if (!eval_report.empty()) {
        eval_options.report_path = eval_report;
      }
      eval_options.run_id = eval_run_id;
      return reljudge::cmd_eval(eval_options);
    }
    for (const auto &p : report_inputs) {
      report_options.report_paths.emplace_back(p);
    }
    report_options.csv_path = report_csv;
    report_options.points_path = report_points;
    return reljudge::cmd_report(report_options);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
