#include <doctest.h>

#include "reljudge/io.hpp"
#include "reljudge/metrics.hpp"
#include "reljudge/pipeline.hpp"

#include <random>
#include <thread>

using namespace reljudge;

namespace {

std::vector<JudgingUnit> units_with_golds(const std::vector<int> &golds) {
  std::vector<JudgingUnit> units;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    units.push_back(JudgingUnit{{"t" + std::to_string(i % 13),
                                 "d" + std::to_string(i), golds[i]},
                                "query " + std::to_string(i % 13),
                                "passage " + std::to_string(i)});
  }
  return units;
}

std::vector<JudgingUnit> random_units(std::mt19937_64 &rng, std::size_t n) {
  std::vector<int> golds(n);
  for (auto &g : golds) {
    g = static_cast<int>(rng() % 4);
  }
  return units_with_golds(golds);
}

PipelineSpec multi_stage_spec(TemplateId stage2_template) {
  PipelineSpec spec;
  spec.topology = Topology::multi_stage;
  spec.stage1 = StageSpec{ModelConfig{"model-a"}, TemplateId::binary, {}};
  spec.stage2 = StageSpec{ModelConfig{"model-b"}, stage2_template, {}};
  return spec;
}

SyntheticAssessorSpec random_confusion(std::mt19937_64 &rng,
                                       std::uint64_t seed) {
  SyntheticAssessorSpec spec;
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  for (auto &row : spec.confusion) {
    double total = 0.0;
    for (auto &p : row) {
      p = weight(rng);
      total += p;
    }
    for (auto &p : row) {
      p /= total;
    }
    // tighten the row sum so validation at 1e-9 passes
    double sum = 0.0;
    for (std::size_t c = 0; c + 1 < row.size(); ++c) {
      sum += row[c];
    }
    row[3] = 1.0 - sum;
  }
  spec.seed = seed;
  return spec;
}

} // namespace

TEST_CASE("route: single stage finalizes every score") {
  for (int s = 0; s <= 3; ++s) {
    const auto d = route(Topology::single_stage, s);
    CHECK_FALSE(d.invoke_stage2);
    CHECK(d.final_label == s);
  }
}

TEST_CASE("route: zero short-circuits, nonzero goes to stage 2") {
  const auto zero = route(Topology::multi_stage, 0);
  CHECK_FALSE(zero.invoke_stage2);
  CHECK(zero.final_label == 0);
  CHECK(route(Topology::multi_stage, 1).invoke_stage2);

  const auto mm_zero = route(Topology::multi_model_single_stage, 0);
  CHECK_FALSE(mm_zero.invoke_stage2);
  CHECK(mm_zero.final_label == 0);
  CHECK(route(Topology::multi_model_single_stage, 2).invoke_stage2);
}

TEST_CASE("route validates the stage-1 range") {
  CHECK_THROWS_AS(route(Topology::multi_stage, 2), std::out_of_range);
  CHECK_THROWS_AS(route(Topology::single_stage, 4), std::out_of_range);
}

TEST_CASE("finalize_stage2 passes the stage-2 score through") {
  CHECK(finalize_stage2(Topology::multi_stage, TemplateId::normal, 0) == 0);
  CHECK(finalize_stage2(Topology::multi_stage, TemplateId::relevant, 1) == 1);
  CHECK(finalize_stage2(Topology::multi_model_single_stage,
                        TemplateId::normal, 3) == 3);
  CHECK_THROWS_AS(
      finalize_stage2(Topology::multi_stage, TemplateId::relevant, 0),
      std::out_of_range);
  CHECK_THROWS_AS(
      finalize_stage2(Topology::single_stage, TemplateId::normal, 1),
      ConfigError);
}

TEST_CASE("pipeline spec validation") {
  PipelineSpec spec;
  spec.topology = Topology::single_stage;
  spec.stage1 = StageSpec{ModelConfig{"m"}, TemplateId::binary, {}};
  CHECK_THROWS_AS(spec.validate(), ConfigError); // wrong template

  spec.stage1.template_id = TemplateId::normal;
  CHECK_NOTHROW(spec.validate());
  spec.stage2 = StageSpec{ModelConfig{"m2"}, TemplateId::normal, {}};
  CHECK_THROWS_AS(spec.validate(), ConfigError); // stage 2 not allowed

  spec.topology = Topology::multi_model_single_stage;
  CHECK_NOTHROW(spec.validate());
  spec.stage2->template_id = TemplateId::relevant;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = multi_stage_spec(TemplateId::relevant);
  CHECK_NOTHROW(spec.validate());
  spec.stage2->template_id = TemplateId::binary;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.stage2.reset();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("multi-stage identity run routes exactly by gold") {
  const auto units = units_with_golds({0, 1, 2, 3});
  const auto spec = multi_stage_spec(TemplateId::relevant);
  SyntheticAssessor stage1(SyntheticAssessorSpec::identity(1));
  SyntheticAssessor stage2(SyntheticAssessorSpec::identity(2));

  const auto result =
      execute_pipeline(spec, units, stage1, &stage2, {2, "synthetic", 1});
  REQUIRE(result.judgments.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(result.judgments[i].ok());
    CHECK(*result.judgments[i].final_label == static_cast<int>(i));
  }
  CHECK(result.manifest.counts.stage2_invocations == 3);
  CHECK(result.manifest.counts.stage1_zero == 1);
  CHECK(result.manifest.counts.ok == 4);
  CHECK_FALSE(result.judgments[0].stage2.has_value());
  CHECK(result.judgments[1].stage2.has_value());
}

TEST_CASE("empty unit list still yields a valid manifest") {
  PipelineSpec spec;
  spec.topology = Topology::single_stage;
  spec.stage1 = StageSpec{ModelConfig{"m"}, TemplateId::normal, {}};
  SyntheticAssessor stage1(SyntheticAssessorSpec::identity(1));
  const auto result =
      execute_pipeline(spec, {}, stage1, nullptr, {4, "synthetic", 0});
  CHECK(result.judgments.empty());
  CHECK(result.manifest.counts.units == 0);
  CHECK(result.manifest.counts.ok == 0);
  REQUIRE(result.manifest.stages.size() == 1);
  CHECK(result.manifest.stages[0].template_name == "normal");
}

TEST_CASE("relevant stage 2 preserves the stage-1 binary decision exactly") {
  std::mt19937_64 rng(404);
  for (int round = 0; round < 5; ++round) {
    const auto units = random_units(rng, 200);
    const auto spec = multi_stage_spec(TemplateId::relevant);
    SyntheticAssessor stage1(random_confusion(rng, rng()));
    SyntheticAssessor stage2(random_confusion(rng, rng()));
    const auto result =
        execute_pipeline(spec, units, stage1, &stage2, {8, "synthetic", 7});

    std::vector<int> stage1_scores;
    std::vector<int> final_binarized;
    std::vector<int> golds_binarized;
    for (const auto &judgment : result.judgments) {
      REQUIRE(judgment.ok());
      REQUIRE(judgment.stage1.has_value());
      REQUIRE(judgment.stage1->score.has_value());
      stage1_scores.push_back(*judgment.stage1->score);
      final_binarized.push_back(std::min(*judgment.final_label, 1));
      golds_binarized.push_back(std::min(judgment.gold_label, 1));

      // zero short-circuit
      if (*judgment.stage1->score == 0) {
        CHECK_FALSE(judgment.stage2.has_value());
        CHECK(*judgment.final_label == 0);
      }
    }
    CHECK(final_binarized == stage1_scores);
    CHECK(metrics::cohens_kappa(golds_binarized, final_binarized) ==
          metrics::cohens_kappa(golds_binarized, stage1_scores));

    // stage-2 volume bookkeeping
    std::uint64_t nonzero = 0;
    for (const int s : stage1_scores) {
      nonzero += s != 0;
    }
    CHECK(result.manifest.counts.stage2_invocations == nonzero);
  }
}

TEST_CASE("normal stage 2 can override, and zero finals are never invented") {
  std::mt19937_64 rng(777);
  const auto units = random_units(rng, 300);
  const auto spec = multi_stage_spec(TemplateId::normal);
  SyntheticAssessor stage1(random_confusion(rng, 5));
  SyntheticAssessor stage2(random_confusion(rng, 6));
  const auto result =
      execute_pipeline(spec, units, stage1, &stage2, {8, "synthetic", 5});
  for (const auto &judgment : result.judgments) {
    REQUIRE(judgment.ok());
    if (*judgment.final_label == 0) {
      const bool stage1_zero = *judgment.stage1->score == 0;
      const bool stage2_zero =
          judgment.stage2 && judgment.stage2->score == 0;
      CHECK((stage1_zero || stage2_zero));
    }
  }
}

TEST_CASE("pipeline output is deterministic under the synthetic backend") {
  std::mt19937_64 rng(99);
  const auto units = random_units(rng, 120);
  const auto spec = multi_stage_spec(TemplateId::normal);

  const auto run = [&](int concurrency) {
    // fresh assessors with pinned seeds for each run
    std::mt19937_64 inner(2);
    SyntheticAssessor s1(random_confusion(inner, 11));
    SyntheticAssessor s2(random_confusion(inner, 12));
    const auto result = execute_pipeline(spec, units, s1, &s2,
                                         {concurrency, "synthetic", 3});
    std::string serialized;
    for (const auto &judgment : result.judgments) {
      serialized += io::judgment_to_json(judgment).dump();
      serialized += '\n';
    }
    return serialized;
  };
  const auto a = run(1);
  const auto b = run(8);
  CHECK(a == b);
}

namespace {

// delays randomly to shake the completion order
class JitteryAssessor : public Assessor {
public:
  AssessorResponse assess(const RenderedPrompt &,
                          const JudgingUnit &unit) override {
    std::this_thread::sleep_for(
        std::chrono::microseconds(100 + (std::hash<std::string>{}(
                                             unit.qrel.doc_id) %
                                         2000)));
    AssessorResponse response;
    response.raw_text =
        "##final score: " + std::to_string(std::min(unit.qrel.gold_label, 1));
    response.source = ResponseSource::synthetic;
    response.usage_estimated = true;
    return response;
  }
};

class FlakyParseAssessor : public Assessor {
public:
  explicit FlakyParseAssessor(std::string bad_doc, bool recover_on_retry)
      : bad_doc_(std::move(bad_doc)), recover_(recover_on_retry) {}

  AssessorResponse assess(const RenderedPrompt &,
                          const JudgingUnit &unit) override {
    AssessorResponse response;
    response.source = ResponseSource::synthetic;
    response.usage_estimated = true;
    if (unit.qrel.doc_id == bad_doc_) {
      ++bad_calls;
      if (!recover_ || bad_calls < 2) {
        response.raw_text = "no marker here";
        return response;
      }
    }
    response.raw_text = "##final score: 1";
    return response;
  }

  int bad_calls = 0;

private:
  std::string bad_doc_;
  bool recover_;
};

} // namespace

TEST_CASE("judgment order matches unit order regardless of completion order") {
  std::mt19937_64 rng(3);
  const auto units = random_units(rng, 60);
  PipelineSpec spec;
  spec.topology = Topology::multi_stage;
  spec.stage1 = StageSpec{ModelConfig{"m1"}, TemplateId::binary, {}};
  spec.stage2 = StageSpec{ModelConfig{"m2"}, TemplateId::relevant, {}};
  JitteryAssessor stage1;
  SyntheticAssessor stage2(SyntheticAssessorSpec::identity(1));
  const auto result =
      execute_pipeline(spec, units, stage1, &stage2, {8, "synthetic", 0});
  REQUIRE(result.judgments.size() == units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    CHECK(result.judgments[i].doc_id == units[i].qrel.doc_id);
  }
}

TEST_CASE("an unparseable unit is errored without aborting the run") {
  const auto units = units_with_golds({1, 2, 3});
  PipelineSpec spec;
  spec.topology = Topology::single_stage;
  spec.stage1 = StageSpec{ModelConfig{"m"}, TemplateId::normal, {}};
  FlakyParseAssessor stage1(units[1].qrel.doc_id, /*recover=*/false);
  const auto result =
      execute_pipeline(spec, units, stage1, nullptr, {2, "synthetic", 0});
  CHECK(result.judgments[0].ok());
  CHECK_FALSE(result.judgments[1].ok());
  CHECK(result.judgments[2].ok());
  CHECK(result.manifest.counts.ok == 2);
  CHECK(result.manifest.counts.errored == 1);
  CHECK(result.judgments[1].error_detail.find("stage1") != std::string::npos);
  CHECK(result.judgments[1].stage1.has_value()); // response retained
  CHECK_FALSE(result.judgments[1].stage1->score.has_value());
  CHECK(stage1.bad_calls == 2); // retried once with the identical prompt
}

TEST_CASE("one identical-prompt retry can rescue a flaky response") {
  const auto units = units_with_golds({1});
  PipelineSpec spec;
  spec.topology = Topology::single_stage;
  spec.stage1 = StageSpec{ModelConfig{"m"}, TemplateId::normal, {}};
  FlakyParseAssessor stage1(units[0].qrel.doc_id, /*recover=*/true);
  const auto result =
      execute_pipeline(spec, units, stage1, nullptr, {1, "synthetic", 0});
  REQUIRE(result.judgments[0].ok());
  CHECK(*result.judgments[0].final_label == 1);
  CHECK(stage1.bad_calls == 2);
}

namespace {

class ThrowingAssessor : public Assessor {
public:
  AssessorResponse assess(const RenderedPrompt &,
                          const JudgingUnit &) override {
    throw ConfigError("bad credentials");
  }
};

} // namespace

TEST_CASE("configuration errors abort the run") {
  const auto units = units_with_golds({0, 1});
  PipelineSpec spec;
  spec.topology = Topology::single_stage;
  spec.stage1 = StageSpec{ModelConfig{"m"}, TemplateId::normal, {}};
  ThrowingAssessor stage1;
  CHECK_THROWS_AS(
      execute_pipeline(spec, units, stage1, nullptr, {2, "synthetic", 0}),
      ConfigError);
}

TEST_CASE("stage assessor presence must match the spec") {
  const auto units = units_with_golds({0});
  SyntheticAssessor assessor(SyntheticAssessorSpec::identity(1));
  const auto spec = multi_stage_spec(TemplateId::relevant);
  CHECK_THROWS_AS(
      execute_pipeline(spec, units, assessor, nullptr, {1, "synthetic", 0}),
      ConfigError);
}
