#include "reljudge/commands.hpp"

#include "reljudge/cost.hpp"
#include "reljudge/io.hpp"
#include "reljudge/metrics.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace reljudge {

namespace {

std::vector<QrelRecord> load_qrels(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open qrels file: " + path.string());
  }
  return parse_qrels(in);
}

IdTextMap load_text_map(const std::filesystem::path &path,
                        std::optional<TextMapFormat> format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open file: " + path.string());
  }
  return parse_id_text_map(in, format.value_or(infer_text_format(path)));
}

struct BackendBundle {
  std::shared_ptr<Assessor> stage1;
  std::shared_ptr<Assessor> stage2;
  std::unique_ptr<CacheStore> cache; // owns the store for cached/replay
};

std::shared_ptr<ConcurrencyLimiter> limiter_for(
    std::map<std::string, std::shared_ptr<ConcurrencyLimiter>> &by_endpoint,
    const std::string &endpoint, int max_in_flight) {
  auto &slot = by_endpoint[endpoint];
  if (!slot) {
    slot = std::make_shared<ConcurrencyLimiter>(max_in_flight);
  }
  return slot;
}

BackendBundle build_backend(const RunConfig &config) {
  BackendBundle bundle;
  const auto &spec = config.pipeline;
  const int max_in_flight =
      config.max_in_flight > 0 ? config.max_in_flight : config.concurrency;

  const auto synthetic_for = [&](int index, const StageSpec &stage) {
    if (config.synthetic[static_cast<std::size_t>(index)]) {
      return *config.synthetic[static_cast<std::size_t>(index)];
    }
    return SyntheticAssessorSpec::identity(derive_stage_seed(
        config.seed, index + 1, stage.model.model_id));
  };

  switch (config.backend) {
  case BackendMode::synthetic: {
    bundle.stage1 =
        std::make_shared<SyntheticAssessor>(synthetic_for(0, spec.stage1));
    if (spec.stage2) {
      bundle.stage2 =
          std::make_shared<SyntheticAssessor>(synthetic_for(1, *spec.stage2));
    }
    return bundle;
  }
  case BackendMode::live:
  case BackendMode::cached:
  case BackendMode::replay: {
    std::map<std::string, std::shared_ptr<ConcurrencyLimiter>> limiters;
    const auto live_for = [&](const StageSpec &stage) {
      return std::make_shared<LiveAssessor>(
          stage.model, config.retry,
          limiter_for(limiters, stage.model.endpoint_url, max_in_flight));
    };
    if (config.backend == BackendMode::live) {
      bundle.stage1 = live_for(spec.stage1);
      if (spec.stage2) {
        bundle.stage2 = live_for(*spec.stage2);
      }
      return bundle;
    }
    bundle.cache = std::make_unique<CacheStore>(config.cache_dir);
    const bool replay_only = config.backend == BackendMode::replay;
    bundle.stage1 = std::make_shared<CachedAssessor>(
        spec.stage1.model, *bundle.cache,
        replay_only ? nullptr : live_for(spec.stage1));
    if (spec.stage2) {
      bundle.stage2 = std::make_shared<CachedAssessor>(
          spec.stage2->model, *bundle.cache,
          replay_only ? nullptr : live_for(*spec.stage2));
    }
    return bundle;
  }
  }
  throw ConfigError("unknown backend mode");
}

std::string format_metric(const std::optional<double> &value) {
  if (!value) {
    return "undefined";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *value);
  return buf;
}

std::string format_cost(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

// Table-2-shaped single-run table.
std::string format_report_table(const RunManifest &manifest,
                                const metrics::AgreementReport &agreement,
                                const cost::CostReport &cost_report) {
  const auto &stages = manifest.stages;
  const std::string model1 = stages.empty() ? "-" : stages[0].model_id;
  const std::string model2 = stages.size() > 1 ? stages[1].model_id : "-";
  const std::string prompt1 = stages.empty() ? "-" : stages[0].template_name;
  const std::string prompt2 = stages.size() > 1 ? stages[1].template_name : "-";

  std::vector<std::array<std::string, 9>> rows;
  rows.push_back({"Model1", "Model2", "Prompt1", "Prompt2", "Binary κ",
                  "4-scale κ", "α(nominal)", "α(interval)", "Cost"});
  rows.push_back({model1, model2, prompt1, prompt2,
                  format_metric(agreement.binary_kappa),
                  format_metric(agreement.fourscale_kappa),
                  format_metric(agreement.alpha_nominal),
                  format_metric(agreement.alpha_interval),
                  format_cost(cost_report.modeled_cost_per_mtok)});

  // column widths in code points, not bytes (κ/α are multi-byte)
  const auto display_width = [](const std::string &s) {
    std::size_t w = 0;
    for (const char c : s) {
      w += (static_cast<unsigned char>(c) & 0xc0) != 0x80;
    }
    return w;
  };
  std::array<std::size_t, 9> widths{};
  for (const auto &row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  std::ostringstream out;
  for (const auto &row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size()) {
        out << std::string(widths[c] - display_width(row[c]) + 2, ' ');
      }
    }
    out << '\n';
  }
  return out.str();
}

} // namespace

int cmd_judge(const RunConfig &config) {
  try {
    validate_run_config(config);

    const auto qrels = load_qrels(config.qrels_path);
    const auto queries =
        load_text_map(config.queries_path, config.queries_format);
    const auto passages =
        load_text_map(config.passages_path, config.passages_format);
    auto joined = join_dataset(qrels, queries, passages);
    if (!joined.unresolved.empty()) {
      std::cerr << "warning: " << joined.unresolved.size()
                << " qrels could not be joined (missing topic/doc or blank "
                   "text)\n";
    }

    auto backend = build_backend(config);

    ExecuteOptions options;
    options.concurrency = config.concurrency;
    options.backend = std::string(backend_name(config.backend));
    options.seed = config.seed;

    auto result = execute_pipeline(config.pipeline, joined.units,
                                   *backend.stage1, backend.stage2.get(),
                                   options);
    result.manifest.counts.unresolved = joined.unresolved.size();

    std::filesystem::create_directories(config.out_dir);
    io::write_judgments_jsonl(config.out_dir / "judgments.jsonl",
                              result.judgments);
    io::write_manifest(config.out_dir / "manifest.json", result.manifest);
    io::write_pseudo_qrels(config.out_dir / "pseudo-qrels.txt",
                           result.judgments);

    const auto &counts = result.manifest.counts;
    std::cout << "judged " << counts.units << " units: ok=" << counts.ok
              << " errored=" << counts.errored
              << " stage2_invocations=" << counts.stage2_invocations
              << " unresolved=" << counts.unresolved << "\n"
              << "outputs in " << config.out_dir.string() << "\n";

    if (counts.units > 0 && counts.ok == 0) {
      std::cerr << "error: no judgment succeeded\n";
      return 1;
    }
    return 0;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const EvalOptions &options) {
  try {
    const auto judgments = io::read_judgments_jsonl(options.judgments_path);
    const auto qrels = load_qrels(options.qrels_path);

    const auto manifest_path =
        options.manifest_path.value_or(options.judgments_path.parent_path() /
                                       "manifest.json");
    const auto manifest = io::read_manifest(manifest_path);

    std::unordered_map<std::string, int> gold;
    gold.reserve(qrels.size());
    for (const auto &qrel : qrels) {
      gold.emplace(qrel.topic_id + '\x1f' + qrel.doc_id, qrel.gold_label);
    }

    // metrics run over the intersection; judgments absent from the qrels are
    // reported, never silently dropped
    std::vector<Judgment> retained;
    std::vector<std::string> orphans;
    retained.reserve(judgments.size());
    for (const auto &judgment : judgments) {
      const auto it = gold.find(judgment.topic_id + '\x1f' + judgment.doc_id);
      if (it == gold.end()) {
        orphans.push_back(judgment.topic_id + "/" + judgment.doc_id);
        continue;
      }
      retained.push_back(judgment);
      retained.back().gold_label = it->second;
    }
    if (!orphans.empty()) {
      std::cerr << "warning: " << orphans.size()
                << " judgments have no gold qrel:";
      for (std::size_t i = 0; i < orphans.size() && i < 10; ++i) {
        std::cerr << ' ' << orphans[i];
      }
      if (orphans.size() > 10) {
        std::cerr << " ...";
      }
      std::cerr << "\n";
    }

    const auto agreement = metrics::agreement_report(retained);

    cost::StagePrices stage1_prices;
    std::optional<cost::StagePrices> stage2_prices;
    if (!manifest.stages.empty()) {
      stage1_prices = {manifest.stages[0].price_input_per_mtok,
                       manifest.stages[0].price_output_per_mtok};
    }
    if (manifest.stages.size() > 1) {
      stage2_prices = cost::StagePrices{
          manifest.stages[1].price_input_per_mtok,
          manifest.stages[1].price_output_per_mtok};
    }
    const auto cost_report =
        cost::observed_cost(retained, stage1_prices, stage2_prices);

    // structural identity footnote: with a Relevant stage 2 the binarized
    // finals must replicate the stage-1 binary decisions exactly
    std::optional<bool> binary_identity;
    if (manifest.topology == Topology::multi_stage &&
        manifest.stages.size() > 1 &&
        manifest.stages[1].template_name == "relevant") {
      bool holds = true;
      for (const auto &judgment : retained) {
        if (!judgment.ok()) {
          continue;
        }
        if (!judgment.stage1 || !judgment.stage1->score ||
            std::min(*judgment.final_label, 1) != *judgment.stage1->score) {
          holds = false;
          break;
        }
      }
      binary_identity = holds;
    }

    const std::string run_id =
        !options.run_id.empty()
            ? options.run_id
            : (options.judgments_path.parent_path().filename().empty()
                   ? std::string("run")
                   : options.judgments_path.parent_path().filename().string());

    nlohmann::json report{
        {"schema_version", std::string(io::kSchemaVersion)},
        {"run_id", run_id},
        {"run",
         {{"backend", manifest.backend},
          {"topology", std::string(topology_name(manifest.topology))},
          {"seed", manifest.seed},
          {"stages", nlohmann::json::array()}}},
        {"agreement", io::agreement_to_json(agreement)},
        {"cost", io::cost_to_json(cost_report)},
    };
    for (const auto &stage : manifest.stages) {
      report["run"]["stages"].push_back({{"model_id", stage.model_id},
                                         {"template", stage.template_name}});
    }
    if (binary_identity) {
      report["binary_identity_with_stage1"] = *binary_identity;
    }

    const auto report_path = options.report_path.value_or(
        options.judgments_path.parent_path() / "report.json");
    io::write_text_file(report_path, report.dump(2) + "\n");

    std::cout << format_report_table(manifest, agreement, cost_report);
    if (binary_identity) {
      std::cout << (*binary_identity
                        ? "note: binarized finals are identical to the "
                          "stage-1 binary decisions\n"
                        : "note: binarized finals DIVERGE from the stage-1 "
                          "binary decisions (unexpected)\n");
    }
    std::cout << "report written to " << report_path.string() << "\n";
    return 0;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

std::string csv_metric(const nlohmann::json &value) {
  if (value.is_null()) {
    return "";
  }
  char buf[64];
  const auto [ptr, ec] = std::to_chars(
      buf, buf + sizeof(buf), value.get<double>());
  return ec == std::errc{} ? std::string(buf, ptr) : std::string();
}

} // namespace

int cmd_report(const ReportOptions &options) {
  try {
    if (options.report_paths.empty()) {
      std::cerr << "error: at least one report JSON is required\n";
      return 2;
    }

    std::ostringstream csv;
    std::ostringstream points;
    csv << "run_id,model1,model2,prompt1,prompt2,binary_kappa,fourscale_"
           "kappa,alpha_nominal,alpha_interval,cost_per_mtok,n_ok,n_errored\n";
    points << "run_id,cost_per_mtok,binary_kappa,fourscale_kappa,alpha_"
              "nominal,alpha_interval\n";

    for (const auto &path : options.report_paths) {
      nlohmann::json report;
      {
        std::ifstream in(path);
        if (!in) {
          throw std::runtime_error("cannot open report: " + path.string());
        }
        in >> report;
      }
      const auto version = report.at("schema_version").get<std::string>();
      if (version != io::kSchemaVersion) {
        std::cerr << "error: schema version mismatch in " << path.string()
                  << ": got '" << version << "', expected '"
                  << io::kSchemaVersion << "'\n";
        return 2;
      }
      const auto &stages = report.at("run").at("stages");
      const std::string model1 =
          !stages.empty() ? stages[0].at("model_id").get<std::string>() : "-";
      const std::string model2 =
          stages.size() > 1 ? stages[1].at("model_id").get<std::string>()
                            : "-";
      const std::string prompt1 =
          !stages.empty() ? stages[0].at("template").get<std::string>() : "-";
      const std::string prompt2 =
          stages.size() > 1 ? stages[1].at("template").get<std::string>()
                            : "-";
      const auto &agreement = report.at("agreement");
      const auto &cost_obj = report.at("cost");
      const auto run_id = report.at("run_id").get<std::string>();
      const auto cost_str =
          csv_metric(cost_obj.at("modeled_cost_per_mtok"));

      csv << run_id << ',' << model1 << ',' << model2 << ',' << prompt1 << ','
          << prompt2 << ',' << csv_metric(agreement.at("binary_kappa")) << ','
          << csv_metric(agreement.at("fourscale_kappa")) << ','
          << csv_metric(agreement.at("alpha_nominal")) << ','
          << csv_metric(agreement.at("alpha_interval")) << ',' << cost_str
          << ',' << agreement.at("n_ok").get<std::uint64_t>() << ','
          << agreement.at("n_errored").get<std::uint64_t>() << '\n';
      points << run_id << ',' << cost_str << ','
             << csv_metric(agreement.at("binary_kappa")) << ','
             << csv_metric(agreement.at("fourscale_kappa")) << ','
             << csv_metric(agreement.at("alpha_nominal")) << ','
             << csv_metric(agreement.at("alpha_interval")) << '\n';
    }

    io::write_text_file(options.csv_path, csv.str());
    io::write_text_file(options.points_path, points.str());
    std::cout << "wrote " << options.csv_path.string() << " and "
              << options.points_path.string() << " ("
              << options.report_paths.size() << " runs)\n";
    return 0;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace reljudge
