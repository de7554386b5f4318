#include "reljudge/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace reljudge::metrics {

int binarize(int label) {
  if (label < 0 || label > 3) {
    throw std::out_of_range("label out of range 0..3: " +
                            std::to_string(label));
  }
  return std::min(label, 1);
}

namespace {

void check_pair(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold and pred lengths differ");
  }
  if (gold.empty()) {
    throw std::invalid_argument("empty label vectors");
  }
}

} // namespace

std::optional<double> cohens_kappa(std::span<const int> gold,
                                   std::span<const int> pred) {
  check_pair(gold, pred);
  const std::size_t n = gold.size();

  std::map<int, std::uint64_t> gold_counts;
  std::map<int, std::uint64_t> pred_counts;
  std::uint64_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++gold_counts[gold[i]];
    ++pred_counts[pred[i]];
    if (gold[i] == pred[i]) {
      ++agree;
    }
  }

  // p_e in exact integer arithmetic so the degenerate case is detected
  // reliably: p_e = 1 iff sum_c ng(c)*np(c) == n^2.
  std::uint64_t pe_numerator = 0;
  for (const auto &[label, ng] : gold_counts) {
    const auto it = pred_counts.find(label);
    if (it != pred_counts.end()) {
      pe_numerator += ng * it->second;
    }
  }
  const std::uint64_t n_squared =
      static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  if (pe_numerator == n_squared) {
    if (agree == n) {
      return 1.0;
    }
    return std::nullopt;
  }

  const double po = static_cast<double>(agree) / static_cast<double>(n);
  const double pe =
      static_cast<double>(pe_numerator) / static_cast<double>(n_squared);
  return (po - pe) / (1.0 - pe);
}

std::optional<double> krippendorff_alpha(std::span<const int> gold,
                                         std::span<const int> pred,
                                         AlphaLevel level) {
  check_pair(gold, pred);
  const std::size_t n = gold.size();

  // n_c: marginals of the coincidence matrix = value counts over the pooled
  // 2n values.
  std::map<int, std::uint64_t> value_counts;
  for (std::size_t i = 0; i < n; ++i) {
    ++value_counts[gold[i]];
    ++value_counts[pred[i]];
  }
  if (value_counts.size() == 1) {
    return std::nullopt; // no variance, D_e = 0
  }

  const auto delta2 = [&](int a, int b) -> double {
    if (level == AlphaLevel::nominal) {
      return a == b ? 0.0 : 1.0;
    }
    const double d = static_cast<double>(a) - static_cast<double>(b);
    return d * d;
  };

  // Each unit holds two values; its coincidence contribution reduces to one
  // delta^2 per unit: D_o = (1/n) * sum_i delta^2(gold_i, pred_i).
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    observed += delta2(gold[i], pred[i]);
  }
  observed /= static_cast<double>(n);

  // D_e = sum_{c != k} n_c * n_k * delta^2 / (N(N-1)), N = 2n.
  double expected_numerator = 0.0;
  for (const auto &[c, nc] : value_counts) {
    for (const auto &[k, nk] : value_counts) {
      if (c != k) {
        expected_numerator +=
            static_cast<double>(nc) * static_cast<double>(nk) * delta2(c, k);
      }
    }
  }
  const double total = 2.0 * static_cast<double>(n);
  const double expected = expected_numerator / (total * (total - 1.0));

  return 1.0 - observed / expected;
}

ConfusionMatrix confusion_matrix(std::span<const int> gold,
                                 std::span<const int> pred, int num_classes) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold and pred lengths differ");
  }
  if (num_classes < 1) {
    throw std::invalid_argument("num_classes must be >= 1");
  }
  ConfusionMatrix matrix(
      static_cast<std::size_t>(num_classes),
      std::vector<std::uint64_t>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= num_classes || pred[i] < 0 ||
        pred[i] >= num_classes) {
      throw std::out_of_range("label outside 0.." +
                              std::to_string(num_classes - 1));
    }
    ++matrix[static_cast<std::size_t>(gold[i])]
            [static_cast<std::size_t>(pred[i])];
  }
  return matrix;
}

AgreementReport agreement_report(const std::vector<Judgment> &judgments) {
  std::vector<int> gold;
  std::vector<int> pred;
  gold.reserve(judgments.size());
  pred.reserve(judgments.size());
  std::uint64_t errored = 0;
  for (const auto &judgment : judgments) {
    if (!judgment.ok()) {
      ++errored;
      continue;
    }
    gold.push_back(judgment.gold_label);
    pred.push_back(*judgment.final_label);
  }
  if (gold.empty()) {
    throw std::invalid_argument("no ok judgments to evaluate");
  }

  std::vector<int> gold_binary(gold.size());
  std::vector<int> pred_binary(pred.size());
  std::transform(gold.begin(), gold.end(), gold_binary.begin(), binarize);
  std::transform(pred.begin(), pred.end(), pred_binary.begin(), binarize);

  AgreementReport report;
  report.n_ok = gold.size();
  report.n_errored = errored;
  report.fourscale_kappa = cohens_kappa(gold, pred);
  report.binary_kappa = cohens_kappa(gold_binary, pred_binary);
  report.alpha_nominal = krippendorff_alpha(gold, pred, AlphaLevel::nominal);
  report.alpha_interval = krippendorff_alpha(gold, pred, AlphaLevel::interval);
  report.confusion = confusion_matrix(gold, pred, 4);
  report.binary_confusion = confusion_matrix(gold_binary, pred_binary, 2);
  return report;
}

} // namespace reljudge::metrics
