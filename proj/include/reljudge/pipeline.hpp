#pragma once

#include "reljudge/assessors.hpp"
#include "reljudge/prompts.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reljudge {

enum class Topology { single_stage, multi_model_single_stage, multi_stage };

std::string_view topology_name(Topology topology);
Topology topology_from_name(std::string_view name);

struct StageSpec {
  ModelConfig model;
  TemplateId template_id = TemplateId::normal;
  // escape hatch: custom body for template_id, same score range
  std::optional<std::filesystem::path> template_file;
};

struct PipelineSpec {
  Topology topology = Topology::single_stage;
  StageSpec stage1;
  std::optional<StageSpec> stage2;

  // single_stage: no stage 2, stage 1 Normal.
  // multi_model_single_stage: stage 2 present, both Normal.
  // multi_stage: stage 2 present, stage 1 Binary, stage 2 Relevant|Normal.
  void validate() const; // throws ConfigError
};

struct StageOutcome {
  AssessorResponse response;
  std::optional<int> score; // absent when the response failed to parse
};

struct Judgment {
  std::string topic_id;
  std::string doc_id;
  int gold_label = 0;
  std::optional<StageOutcome> stage1;
  std::optional<StageOutcome> stage2;
  std::optional<int> final_label;
  std::string error_detail; // non-empty iff errored

  bool ok() const { return final_label.has_value(); }
};

struct RouteDecision {
  bool invoke_stage2 = false;
  int final_label = -1; // meaningful when !invoke_stage2
};

// Stage-1 routing. Zero short-circuits to final 0 in both two-stage
// topologies; single-stage finalizes directly.
RouteDecision route(Topology topology, int stage1_score);

// Stage 2 always decides the final label. With the Relevant template the
// range [1,3] makes 0 impossible; with Normal a stage-2 zero overrides
// stage 1.
int finalize_stage2(Topology topology, TemplateId stage2_template,
                    int stage2_score);

struct StageManifest {
  std::string model_id;
  std::string template_name;
  std::string template_sha256;
  double temperature = 0.0;
  double price_input_per_mtok = 0.0;
  double price_output_per_mtok = 0.0;
};

struct RunCounts {
  std::uint64_t units = 0;
  std::uint64_t ok = 0;
  std::uint64_t errored = 0;
  std::uint64_t stage2_invocations = 0;
  std::uint64_t stage1_zero = 0;
  std::uint64_t unresolved = 0; // filled by the caller after join
};

struct RunManifest {
  std::string schema_version = "1";
  std::string backend;
  Topology topology = Topology::single_stage;
  std::vector<StageManifest> stages;
  std::uint64_t seed = 0;
  int concurrency = 0;
  RunCounts counts;
  double stage1_zero_rate = 0.0;
  std::uint64_t wall_ms = 0;
};

struct ExecuteOptions {
  int concurrency = 8;
  std::string backend = "synthetic"; // recorded in the manifest
  std::uint64_t seed = 0;            // recorded in the manifest
};

struct PipelineResult {
  std::vector<Judgment> judgments;
  RunManifest manifest;
};

// Judges every unit with bounded parallelism; output order always matches
// input order. Per-unit transport/API/parse failures mark that judgment
// errored; configuration errors and replay misses abort the run.
PipelineResult execute_pipeline(const PipelineSpec &spec,
                                const std::vector<JudgingUnit> &units,
                                Assessor &stage1, Assessor *stage2,
                                const ExecuteOptions &options = {});

} // namespace reljudge
