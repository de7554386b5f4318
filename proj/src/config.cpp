#include "reljudge/config.hpp"

#include "reljudge/digest.hpp"

#include <json.hpp>

#include <fstream>

namespace reljudge {

std::string_view backend_name(BackendMode mode) {
  switch (mode) {
  case BackendMode::live:
    return "live";
  case BackendMode::cached:
    return "cached";
  case BackendMode::replay:
    return "replay";
  case BackendMode::synthetic:
    return "synthetic";
  }
  return "synthetic";
}

BackendMode backend_from_name(std::string_view name) {
  if (name == "live") {
    return BackendMode::live;
  }
  if (name == "cached") {
    return BackendMode::cached;
  }
  if (name == "replay") {
    return BackendMode::replay;
  }
  if (name == "synthetic") {
    return BackendMode::synthetic;
  }
  throw ConfigError("unknown backend: '" + std::string(name) +
                    "' (expected live|cached|replay|synthetic)");
}

TextMapFormat infer_text_format(const std::filesystem::path &path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") {
    return TextMapFormat::jsonl;
  }
  return TextMapFormat::tsv;
}

std::uint64_t derive_stage_seed(std::uint64_t run_seed, int stage_index,
                                const std::string &model_id) {
  std::string key = "stage-seed";
  key += '\x1f';
  key += std::to_string(run_seed);
  key += '\x1f';
  key += std::to_string(stage_index);
  key += '\x1f';
  key += model_id;
  return sha256_u64(key);
}

namespace {

std::filesystem::path resolve(const std::filesystem::path &base,
                              const std::filesystem::path &p) {
  return p.is_absolute() ? p : base / p;
}

TextMapFormat parse_format(const nlohmann::json &value) {
  const auto name = value.get<std::string>();
  if (name == "tsv") {
    return TextMapFormat::tsv;
  }
  if (name == "jsonl") {
    return TextMapFormat::jsonl;
  }
  throw ConfigError("unknown text format: '" + name +
                    "' (expected tsv|jsonl)");
}

ModelConfig parse_model(const nlohmann::json &obj) {
  ModelConfig model;
  model.model_id = obj.at("model_id").get<std::string>();
  if (obj.contains("endpoint_url")) {
    model.endpoint_url = obj["endpoint_url"].get<std::string>();
  }
  if (obj.contains("api_key_env")) {
    model.api_key_env = obj["api_key_env"].get<std::string>();
  }
  if (obj.contains("temperature")) {
    model.temperature = obj["temperature"].get<double>();
  }
  if (obj.contains("max_output_tokens")) {
    model.max_output_tokens = obj["max_output_tokens"].get<int>();
  }
  if (obj.contains("price_input_per_mtok")) {
    model.price_input_per_mtok = obj["price_input_per_mtok"].get<double>();
  }
  if (obj.contains("price_output_per_mtok")) {
    model.price_output_per_mtok = obj["price_output_per_mtok"].get<double>();
  }
  return model;
}

SyntheticAssessorSpec parse_synthetic(const nlohmann::json &obj,
                                      std::uint64_t default_seed) {
  SyntheticAssessorSpec spec;
  const auto &rows = obj.at("confusion");
  if (!rows.is_array() || rows.size() != 4) {
    throw ConfigError("synthetic confusion must be a 4x4 matrix");
  }
  for (std::size_t r = 0; r < 4; ++r) {
    if (!rows[r].is_array() || rows[r].size() != 4) {
      throw ConfigError("synthetic confusion must be a 4x4 matrix");
    }
    for (std::size_t c = 0; c < 4; ++c) {
      spec.confusion[r][c] = rows[r][c].get<double>();
    }
  }
  spec.seed = obj.contains("seed") ? obj["seed"].get<std::uint64_t>()
                                   : default_seed;
  spec.validate();
  return spec;
}

StageSpec parse_stage(const nlohmann::json &obj,
                      const std::filesystem::path &base) {
  StageSpec stage;
  stage.model = parse_model(obj.at("model"));
  stage.template_id = template_from_name(obj.at("template").get<std::string>());
  if (obj.contains("template_file")) {
    stage.template_file =
        resolve(base, obj["template_file"].get<std::string>());
  }
  return stage;
}

} // namespace

RunConfig load_run_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  nlohmann::json obj;
  try {
    in >> obj;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("invalid config JSON in " + path.string() + ": " +
                      e.what());
  }

  const auto base = path.has_parent_path()
                        ? path.parent_path()
                        : std::filesystem::path(".");

  RunConfig config;
  try {
    const auto &dataset = obj.at("dataset");
    config.qrels_path =
        resolve(base, dataset.at("qrels").get<std::string>());
    config.queries_path =
        resolve(base, dataset.at("queries").get<std::string>());
    config.passages_path =
        resolve(base, dataset.at("passages").get<std::string>());
    if (dataset.contains("queries_format")) {
      config.queries_format = parse_format(dataset["queries_format"]);
    }
    if (dataset.contains("passages_format")) {
      config.passages_format = parse_format(dataset["passages_format"]);
    }

    const auto &pipeline = obj.at("pipeline");
    config.pipeline.topology =
        topology_from_name(pipeline.at("topology").get<std::string>());
    config.pipeline.stage1 = parse_stage(pipeline.at("stage1"), base);
    if (pipeline.contains("stage2")) {
      config.pipeline.stage2 = parse_stage(pipeline["stage2"], base);
    }

    if (obj.contains("backend")) {
      config.backend = backend_from_name(obj["backend"].get<std::string>());
    }
    if (obj.contains("cache_dir")) {
      config.cache_dir = resolve(base, obj["cache_dir"].get<std::string>());
    }
    if (obj.contains("concurrency")) {
      config.concurrency = obj["concurrency"].get<int>();
    }
    if (obj.contains("max_in_flight")) {
      config.max_in_flight = obj["max_in_flight"].get<int>();
    }
    if (obj.contains("seed")) {
      config.seed = obj["seed"].get<std::uint64_t>();
    }
    if (obj.contains("out_dir")) {
      config.out_dir = resolve(base, obj["out_dir"].get<std::string>());
    }
    if (obj.contains("retry")) {
      const auto &retry = obj["retry"];
      if (retry.contains("max_retries")) {
        config.retry.max_retries = retry["max_retries"].get<int>();
      }
      if (retry.contains("initial_delay_ms")) {
        config.retry.initial_delay =
            std::chrono::milliseconds(retry["initial_delay_ms"].get<int>());
      }
      if (retry.contains("backoff_factor")) {
        config.retry.backoff_factor = retry["backoff_factor"].get<double>();
      }
      if (retry.contains("max_delay_ms")) {
        config.retry.max_delay =
            std::chrono::milliseconds(retry["max_delay_ms"].get<int>());
      }
      if (retry.contains("request_timeout_s")) {
        config.retry.request_timeout =
            std::chrono::seconds(retry["request_timeout_s"].get<int>());
      }
    }

    // per-stage synthetic specs; seeds default per stage so the two stages
    // draw independently even with identical confusion matrices
    const auto &stage1_json = pipeline.at("stage1");
    if (stage1_json.contains("synthetic")) {
      config.synthetic[0] = parse_synthetic(
          stage1_json["synthetic"],
          derive_stage_seed(config.seed, 1,
                            config.pipeline.stage1.model.model_id));
    }
    if (pipeline.contains("stage2") &&
        pipeline["stage2"].contains("synthetic")) {
      config.synthetic[1] = parse_synthetic(
          pipeline["stage2"]["synthetic"],
          derive_stage_seed(config.seed, 2,
                            config.pipeline.stage2->model.model_id));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }

  validate_run_config(config);
  return config;
}

void validate_run_config(const RunConfig &config) {
  const auto require_file = [](const char *label,
                               const std::filesystem::path &p) {
    if (!std::filesystem::exists(p)) {
      throw ConfigError(std::string(label) +
                        " file does not exist: " + p.string());
    }
  };
  require_file("qrels", config.qrels_path);
  require_file("queries", config.queries_path);
  require_file("passages", config.passages_path);
  config.pipeline.validate();
  if (config.concurrency < 1) {
    throw ConfigError("concurrency must be >= 1");
  }
  if (config.max_in_flight < 0) {
    throw ConfigError("max_in_flight must be >= 0");
  }
  if ((config.backend == BackendMode::cached ||
       config.backend == BackendMode::replay) &&
      config.cache_dir.empty()) {
    throw ConfigError("cached/replay backends require cache_dir");
  }
  for (const auto &spec : config.synthetic) {
    if (spec) {
      spec->validate();
    }
  }
}

} // namespace reljudge
