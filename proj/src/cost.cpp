#include "reljudge/cost.hpp"

#include "reljudge/pipeline.hpp"

#include <stdexcept>

namespace reljudge::cost {

double pipeline_cost(const CostModelInput &input) {
  if (input.cost_m1 < 0.0 || input.cost_m2 < 0.0) {
    throw std::invalid_argument("stage prices must be >= 0");
  }
  if (!(input.rate_m1_zero >= 0.0 && input.rate_m1_zero <= 1.0)) {
    throw std::invalid_argument("rate_m1_zero must be within [0,1]");
  }
  return input.cost_m1 + input.cost_m2 * (1.0 - input.rate_m1_zero);
}

std::uint64_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

std::string_view token_estimate_source_name(TokenEstimateSource source) {
  return source == TokenEstimateSource::provider_usage ? "provider_usage"
                                                       : "heuristic";
}

CostReport observed_cost(const std::vector<Judgment> &judgments,
                         const StagePrices &stage1,
                         const std::optional<StagePrices> &stage2) {
  CostReport report;
  std::uint64_t stage1_parsed = 0;
  std::uint64_t stage1_zero = 0;
  bool any_estimated = false;

  const auto add_stage = [&](const StageOutcome &outcome, std::size_t index) {
    report.observed_input_tokens[index] += outcome.response.input_tokens;
    report.observed_output_tokens[index] += outcome.response.output_tokens;
    any_estimated = any_estimated || outcome.response.usage_estimated;
  };

  for (const auto &judgment : judgments) {
    if (judgment.stage1) {
      add_stage(*judgment.stage1, 0);
      if (judgment.stage1->score) {
        ++stage1_parsed;
        if (*judgment.stage1->score == 0) {
          ++stage1_zero;
        }
      }
    }
    if (judgment.stage2) {
      add_stage(*judgment.stage2, 1);
    }
  }

  report.stage1_zero_rate =
      stage1_parsed ? static_cast<double>(stage1_zero) /
                          static_cast<double>(stage1_parsed)
                    : 0.0;
  report.modeled_cost_per_mtok =
      pipeline_cost(CostModelInput{stage1.input_per_mtok,
                                   stage2 ? stage2->input_per_mtok : 0.0,
                                   report.stage1_zero_rate});

  double usd = 0.0;
  usd += static_cast<double>(report.observed_input_tokens[0]) / 1e6 *
         stage1.input_per_mtok;
  usd += static_cast<double>(report.observed_output_tokens[0]) / 1e6 *
         stage1.output_per_mtok;
  if (stage2) {
    usd += static_cast<double>(report.observed_input_tokens[1]) / 1e6 *
           stage2->input_per_mtok;
    usd += static_cast<double>(report.observed_output_tokens[1]) / 1e6 *
           stage2->output_per_mtok;
  }
  report.observed_cost_usd = usd;
  report.token_estimate_source = any_estimated
                                     ? TokenEstimateSource::heuristic
                                     : TokenEstimateSource::provider_usage;
  return report;
}

} // namespace reljudge::cost
