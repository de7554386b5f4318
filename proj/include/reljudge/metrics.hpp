#pragma once

#include "reljudge/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace reljudge::metrics {

// min(label, 1); throws std::out_of_range outside 0..3.
int binarize(int label);

// kappa = (p_o - p_e) / (1 - p_e), p_e from the product of per-class
// marginals. Degenerate marginals (p_e = 1) with imperfect agreement have no
// defined value -> nullopt; with perfect agreement kappa = 1.
std::optional<double> cohens_kappa(std::span<const int> gold,
                                   std::span<const int> pred);

enum class AlphaLevel { nominal, interval };

// alpha = 1 - D_o/D_e over the two-coder coincidence matrix built from the
// 2n values. nominal: delta(c,k) = [c != k]; interval: (c - k)^2.
// All-identical data (D_e = 0) -> nullopt, never a silent 1.
std::optional<double> krippendorff_alpha(std::span<const int> gold,
                                         std::span<const int> pred,
                                         AlphaLevel level);

using ConfusionMatrix = std::vector<std::vector<std::uint64_t>>;

// entry (g, p) counts units with gold g and prediction p.
ConfusionMatrix confusion_matrix(std::span<const int> gold,
                                 std::span<const int> pred, int num_classes);

struct AgreementReport {
  std::uint64_t n_ok = 0;
  std::uint64_t n_errored = 0;
  std::optional<double> binary_kappa;
  std::optional<double> fourscale_kappa;
  std::optional<double> alpha_nominal;
  std::optional<double> alpha_interval;
  ConfusionMatrix confusion;        // 4x4, rows gold
  ConfusionMatrix binary_confusion; // 2x2
};

// Agreement between gold labels and pipeline finals over the ok judgments.
// Errored judgments are excluded from every metric and only counted.
// Throws std::invalid_argument when no judgment is ok.
AgreementReport agreement_report(const std::vector<Judgment> &judgments);

} // namespace reljudge::metrics
