#pragma once

// Brute-force agreement oracles, kept deliberately naive and independent of
// the library implementation: kappa from direct marginal counting, alpha
// from explicit pair enumeration over the pooled values.

#include <cstddef>
#include <optional>
#include <vector>

namespace oracle {

inline double kappa(const std::vector<int> &gold,
                    const std::vector<int> &pred) {
  const std::size_t n = gold.size();
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i] == pred[i]) {
      observed += 1.0;
    }
  }
  observed /= static_cast<double>(n);

  double expected = 0.0;
  for (int label = 0; label <= 3; ++label) {
    double gold_fraction = 0.0;
    double pred_fraction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gold_fraction += gold[i] == label ? 1.0 : 0.0;
      pred_fraction += pred[i] == label ? 1.0 : 0.0;
    }
    gold_fraction /= static_cast<double>(n);
    pred_fraction /= static_cast<double>(n);
    expected += gold_fraction * pred_fraction;
  }
  return (observed - expected) / (1.0 - expected);
}

// level: false = nominal, true = interval
inline std::optional<double> alpha(const std::vector<int> &gold,
                                   const std::vector<int> &pred,
                                   bool interval) {
  const std::size_t n = gold.size();
  const auto d2 = [&](int a, int b) {
    if (!interval) {
      return a == b ? 0.0 : 1.0;
    }
    const double d = static_cast<double>(a - b);
    return d * d;
  };

  // observed disagreement: ordered within-unit pairs, m_u = 2 per unit
  double observed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    observed_sum += d2(gold[i], pred[i]); // (g,p)
    observed_sum += d2(pred[i], gold[i]); // (p,g)
  }
  const double total_values = 2.0 * static_cast<double>(n);
  const double observed = observed_sum / (total_values * (2.0 - 1.0));

  // expected disagreement: all ordered pairs of distinct positions in the
  // pooled value list
  std::vector<int> pooled;
  pooled.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    pooled.push_back(gold[i]);
    pooled.push_back(pred[i]);
  }
  double expected_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = 0; j < pooled.size(); ++j) {
      if (i != j) {
        expected_sum += d2(pooled[i], pooled[j]);
      }
    }
  }
  const double expected =
      expected_sum / (total_values * (total_values - 1.0));
  if (expected == 0.0) {
    return std::nullopt;
  }
  return 1.0 - observed / expected;
}

} // namespace oracle
