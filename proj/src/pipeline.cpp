#include "reljudge/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace reljudge {

std::string_view topology_name(Topology topology) {
  switch (topology) {
  case Topology::single_stage:
    return "single_stage";
  case Topology::multi_model_single_stage:
    return "multi_model_single_stage";
  case Topology::multi_stage:
    return "multi_stage";
  }
  return "single_stage";
}

Topology topology_from_name(std::string_view name) {
  if (name == "single_stage") {
    return Topology::single_stage;
  }
  if (name == "multi_model_single_stage") {
    return Topology::multi_model_single_stage;
  }
  if (name == "multi_stage") {
    return Topology::multi_stage;
  }
  throw ConfigError("unknown topology: '" + std::string(name) + "'");
}

void PipelineSpec::validate() const {
  stage1.model.validate();
  if (stage2) {
    stage2->model.validate();
  }
  switch (topology) {
  case Topology::single_stage:
    if (stage2) {
      throw ConfigError("single_stage must not declare a stage 2");
    }
    if (stage1.template_id != TemplateId::normal) {
      throw ConfigError("single_stage requires the normal template");
    }
    break;
  case Topology::multi_model_single_stage:
    if (!stage2) {
      throw ConfigError("multi_model_single_stage requires a stage 2");
    }
    if (stage1.template_id != TemplateId::normal ||
        stage2->template_id != TemplateId::normal) {
      throw ConfigError(
          "multi_model_single_stage requires the normal template "
          "at both stages");
    }
    break;
  case Topology::multi_stage:
    if (!stage2) {
      throw ConfigError("multi_stage requires a stage 2");
    }
    if (stage1.template_id != TemplateId::binary) {
      throw ConfigError("multi_stage requires the binary template at stage 1");
    }
    if (stage2->template_id != TemplateId::relevant &&
        stage2->template_id != TemplateId::normal) {
      throw ConfigError(
          "multi_stage requires the relevant or normal template at stage 2");
    }
    break;
  }
}

namespace {

void check_range(int score, const PromptTemplate &tmpl, const char *what) {
  if (score < tmpl.score_min || score > tmpl.score_max) {
    throw std::out_of_range(std::string(what) + " score " +
                            std::to_string(score) + " outside template range");
  }
}

} // namespace

RouteDecision route(Topology topology, int stage1_score) {
  const auto &tmpl = builtin_template(
      topology == Topology::multi_stage ? TemplateId::binary
                                        : TemplateId::normal);
  check_range(stage1_score, tmpl, "stage 1");
  switch (topology) {
  case Topology::single_stage:
    return {false, stage1_score};
  case Topology::multi_model_single_stage:
  case Topology::multi_stage:
    if (stage1_score == 0) {
      return {false, 0};
    }
    return {true, -1};
  }
  return {false, stage1_score};
}

int finalize_stage2(Topology topology, TemplateId stage2_template,
                    int stage2_score) {
  if (topology == Topology::single_stage) {
    throw ConfigError("single_stage has no stage 2 to finalize");
  }
  check_range(stage2_score, builtin_template(stage2_template), "stage 2");
  return stage2_score;
}

namespace {

struct StageRun {
  std::optional<StageOutcome> outcome;
  std::optional<int> score;
  std::string error;
};

std::string excerpt(const std::string &text) {
  constexpr std::size_t kMax = 160;
  std::string out = text.size() <= kMax ? text : text.substr(0, kMax) + "...";
  for (auto &c : out) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  return out;
}

std::string parse_failure_detail(const ScoreParseResult &parsed) {
  if (parsed.status == ScoreParseStatus::out_of_range) {
    return "score out of range in response: " + excerpt(parsed.raw_response);
  }
  return "unparseable response: " + excerpt(parsed.raw_response);
}

// One assessment plus a single identical-prompt retry when the response does
// not parse. Transport-class failures surface in `error` with no outcome.
StageRun run_stage(Assessor &assessor, const PromptTemplate &tmpl,
                   const RenderedPrompt &prompt, const JudgingUnit &unit) {
  StageRun run;
  for (int attempt = 0; attempt < 2; ++attempt) {
    AssessorResponse response;
    try {
      response = assessor.assess(prompt, unit);
    } catch (const TransportError &e) {
      run.error = e.what();
      return run;
    } catch (const ApiError &e) {
      run.error = e.what();
      return run;
    } catch (const CacheError &e) {
      run.error = e.what();
      return run;
    }
    const auto parsed =
        parse_final_score(response.raw_text, tmpl.score_min, tmpl.score_max);
    run.outcome = StageOutcome{std::move(response), std::nullopt};
    if (parsed.ok()) {
      run.outcome->score = parsed.score;
      run.score = parsed.score;
      run.error.clear();
      return run;
    }
    run.error = parse_failure_detail(parsed);
  }
  run.error = "still failing after one retry: " + run.error;
  return run;
}

} // namespace

PipelineResult execute_pipeline(const PipelineSpec &spec,
                                const std::vector<JudgingUnit> &units,
                                Assessor &stage1, Assessor *stage2,
                                const ExecuteOptions &options) {
  spec.validate();
  if (spec.stage2.has_value() != (stage2 != nullptr)) {
    throw ConfigError("stage-2 assessor presence does not match the spec");
  }
  if (options.concurrency < 1) {
    throw ConfigError("concurrency must be >= 1");
  }

  const PromptTemplate tmpl1 =
      spec.stage1.template_file
          ? load_template_file(spec.stage1.template_id,
                               *spec.stage1.template_file)
          : builtin_template(spec.stage1.template_id);
  std::optional<PromptTemplate> tmpl2;
  if (spec.stage2) {
    tmpl2 = spec.stage2->template_file
                ? load_template_file(spec.stage2->template_id,
                                     *spec.stage2->template_file)
                : builtin_template(spec.stage2->template_id);
  }

  const auto start = std::chrono::steady_clock::now();

  std::vector<Judgment> judgments(units.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> stage2_invocations{0};
  std::atomic<bool> cancel{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  const auto judge_unit = [&](const JudgingUnit &unit) {
    Judgment judgment;
    judgment.topic_id = unit.qrel.topic_id;
    judgment.doc_id = unit.qrel.doc_id;
    judgment.gold_label = unit.qrel.gold_label;

    const auto prompt1 = render_prompt(tmpl1, unit);
    auto run1 = run_stage(stage1, tmpl1, prompt1, unit);
    judgment.stage1 = std::move(run1.outcome);
    if (!run1.score) {
      judgment.error_detail = "stage1: " + run1.error;
      return judgment;
    }

    const auto decision = route(spec.topology, *run1.score);
    if (!decision.invoke_stage2) {
      judgment.final_label = decision.final_label;
      return judgment;
    }

    stage2_invocations.fetch_add(1, std::memory_order_relaxed);
    const auto prompt2 = render_prompt(*tmpl2, unit);
    auto run2 = run_stage(*stage2, *tmpl2, prompt2, unit);
    judgment.stage2 = std::move(run2.outcome);
    if (!run2.score) {
      judgment.error_detail = "stage2: " + run2.error;
      return judgment;
    }
    judgment.final_label =
        finalize_stage2(spec.topology, tmpl2->id, *run2.score);
    return judgment;
  };

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size() || cancel.load()) {
        return;
      }
      try {
        judgments[i] = judge_unit(units[i]);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) {
          fatal = std::current_exception();
        }
        cancel.store(true);
        return;
      }
    }
  };

  const std::size_t thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(options.concurrency),
      units.empty() ? 1 : units.size());
  std::vector<std::thread> threads;
  threads.reserve(thread_count > 0 ? thread_count - 1 : 0);
  for (std::size_t t = 1; t < thread_count; ++t) {
    threads.emplace_back(worker);
  }
  worker();
  for (auto &t : threads) {
    t.join();
  }
  if (fatal) {
    std::rethrow_exception(fatal);
  }

  RunManifest manifest;
  manifest.backend = options.backend;
  manifest.topology = spec.topology;
  manifest.seed = options.seed;
  manifest.concurrency = options.concurrency;
  manifest.stages.push_back(StageManifest{
      spec.stage1.model.model_id,
      std::string(template_name(tmpl1.id)),
      template_sha256(tmpl1),
      spec.stage1.model.temperature,
      spec.stage1.model.price_input_per_mtok,
      spec.stage1.model.price_output_per_mtok,
  });
  if (spec.stage2) {
    manifest.stages.push_back(StageManifest{
        spec.stage2->model.model_id,
        std::string(template_name(tmpl2->id)),
        template_sha256(*tmpl2),
        spec.stage2->model.temperature,
        spec.stage2->model.price_input_per_mtok,
        spec.stage2->model.price_output_per_mtok,
    });
  }

  auto &counts = manifest.counts;
  counts.units = units.size();
  std::uint64_t stage1_parsed = 0;
  for (const auto &judgment : judgments) {
    if (judgment.ok()) {
      ++counts.ok;
    } else {
      ++counts.errored;
    }
    if (judgment.stage1 && judgment.stage1->score) {
      ++stage1_parsed;
      if (*judgment.stage1->score == 0) {
        ++counts.stage1_zero;
      }
    }
  }
  counts.stage2_invocations = stage2_invocations.load();
  manifest.stage1_zero_rate =
      stage1_parsed ? static_cast<double>(counts.stage1_zero) /
                          static_cast<double>(stage1_parsed)
                    : 0.0;
  manifest.wall_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start)
          .count());

  return PipelineResult{std::move(judgments), std::move(manifest)};
}

} // namespace reljudge
