#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace reljudge {
struct Judgment;
}

namespace reljudge::cost {

struct CostModelInput {
  double cost_m1 = 0.0;      // USD per million input tokens, stage 1
  double cost_m2 = 0.0;      // stage 2; 0 when the pipeline has no stage 2
  double rate_m1_zero = 0.0; // fraction of units stage 1 scores as 0
};

// Modeled pipeline cost per million input tokens:
//   cost_m1 + cost_m2 * (1 - rate_m1_zero)
// Output tokens are excluded from the model.
double pipeline_cost(const CostModelInput &input);

// Crude byte heuristic, ceil(bytes / 4). Used only when provider usage is
// absent.
std::uint64_t estimate_tokens(std::string_view text);

enum class TokenEstimateSource { provider_usage, heuristic };

std::string_view token_estimate_source_name(TokenEstimateSource source);

struct StagePrices {
  double input_per_mtok = 0.0;
  double output_per_mtok = 0.0;
};

struct CostReport {
  double modeled_cost_per_mtok = 0.0;
  double stage1_zero_rate = 0.0; // measured from the run, not assumed
  std::array<std::uint64_t, 2> observed_input_tokens{};
  std::array<std::uint64_t, 2> observed_output_tokens{};
  double observed_cost_usd = 0.0;
  TokenEstimateSource token_estimate_source =
      TokenEstimateSource::provider_usage;
};

// Sums provider-reported token usage per stage and prices it. Unlike the
// modeled cost, observed cost includes output tokens when usage reports
// them. The source flag flips to heuristic if any contributing response had
// estimated counts.
CostReport observed_cost(const std::vector<Judgment> &judgments,
                         const StagePrices &stage1,
                         const std::optional<StagePrices> &stage2);

} // namespace reljudge::cost
