#pragma once

#include "reljudge/assessors.hpp"
#include "reljudge/pipeline.hpp"

#include <array>
#include <filesystem>
#include <optional>

namespace reljudge {

enum class BackendMode { live, cached, replay, synthetic };

std::string_view backend_name(BackendMode mode);
BackendMode backend_from_name(std::string_view name);

struct RunConfig {
  std::filesystem::path qrels_path;
  std::filesystem::path queries_path;
  std::filesystem::path passages_path;
  std::optional<TextMapFormat> queries_format;  // inferred when absent
  std::optional<TextMapFormat> passages_format;

  PipelineSpec pipeline;
  BackendMode backend = BackendMode::synthetic;
  std::filesystem::path cache_dir;
  int concurrency = 8;
  int max_in_flight = 0; // per-endpoint live cap; 0 = same as concurrency
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  // per-stage synthetic specs; defaults are derived when absent
  std::array<std::optional<SyntheticAssessorSpec>, 2> synthetic;

  RetryPolicy retry;
};

// Parses the JSON run config. Relative paths resolve against the config
// file's directory. Validation is eager: dataset files must exist, the
// pipeline spec must be valid, cached/replay need a cache dir.
RunConfig load_run_config(const std::filesystem::path &path);

void validate_run_config(const RunConfig &config); // throws ConfigError

TextMapFormat infer_text_format(const std::filesystem::path &path);

// Stage seed used when the config does not pin one: mixes the run seed with
// the stage number and model id so distinct stages draw independently.
std::uint64_t derive_stage_seed(std::uint64_t run_seed, int stage_index,
                                const std::string &model_id);

} // namespace reljudge
