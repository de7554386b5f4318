#include <doctest.h>

#include "reljudge/metrics.hpp"

#include "oracle.hpp"

#include <algorithm>
#include <random>

using namespace reljudge;
using namespace reljudge::metrics;

namespace {

Judgment make_judgment(int gold, std::optional<int> final_label) {
  static int counter = 0;
  Judgment j;
  j.topic_id = "t";
  j.doc_id = "d" + std::to_string(counter++);
  j.gold_label = gold;
  j.final_label = final_label;
  if (!final_label) {
    j.error_detail = "stage1: synthetic failure";
  }
  return j;
}

std::vector<int> random_labels(std::mt19937_64 &rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto &x : v) {
    x = static_cast<int>(rng() % 4);
  }
  return v;
}

} // namespace

TEST_CASE("binarize") {
  CHECK(binarize(0) == 0);
  CHECK(binarize(1) == 1);
  CHECK(binarize(2) == 1);
  CHECK(binarize(3) == 1);
  CHECK_THROWS_AS(binarize(4), std::out_of_range);
  CHECK_THROWS_AS(binarize(-1), std::out_of_range);
}

TEST_CASE("binarize is idempotent and order-preserving") {
  for (int a = 0; a <= 3; ++a) {
    CHECK(binarize(binarize(a)) == binarize(a));
    for (int b = a; b <= 3; ++b) {
      CHECK(binarize(a) <= binarize(b));
    }
  }
}

TEST_CASE("cohens_kappa perfect agreement") {
  const std::vector<int> v{0, 1, 2, 3};
  CHECK(cohens_kappa(v, v) == 1.0);
}

TEST_CASE("cohens_kappa hand fixture is exactly 0.5") {
  const std::vector<int> gold{0, 0, 1, 1};
  const std::vector<int> pred{0, 1, 1, 1};
  const auto k = cohens_kappa(gold, pred);
  REQUIRE(k.has_value());
  CHECK(*k == 0.5); // p_o 0.75, p_e 0.5; exact in IEEE arithmetic
}

TEST_CASE("cohens_kappa with disjoint marginals") {
  const std::vector<int> gold{0, 0};
  const std::vector<int> pred{1, 1};
  const auto k = cohens_kappa(gold, pred);
  REQUIRE(k.has_value());
  CHECK(*k == 0.0); // p_o = 0, p_e = 0
}

TEST_CASE("cohens_kappa degenerate-but-perfect case") {
  const std::vector<int> v{2, 2, 2};
  CHECK(cohens_kappa(v, v) == 1.0); // p_e = 1 and p_o = 1
}

TEST_CASE("cohens_kappa rejects empty and mismatched input") {
  const std::vector<int> empty;
  const std::vector<int> one{1};
  CHECK_THROWS_AS(cohens_kappa(empty, empty), std::invalid_argument);
  CHECK_THROWS_AS(cohens_kappa(one, empty), std::invalid_argument);
}

TEST_CASE("cohens_kappa symmetry and self-agreement") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 50; ++round) {
    const auto n = 2 + rng() % 30;
    const auto gold = random_labels(rng, n);
    const auto pred = random_labels(rng, n);
    const auto a = cohens_kappa(gold, pred);
    const auto b = cohens_kappa(pred, gold);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(*a == doctest::Approx(*b).epsilon(1e-14));
    }
    CHECK(cohens_kappa(gold, gold) == 1.0);
  }
}

TEST_CASE("krippendorff_alpha perfect agreement at both levels") {
  const std::vector<int> v{0, 1, 2, 3};
  CHECK(*krippendorff_alpha(v, v, AlphaLevel::nominal) == 1.0);
  CHECK(*krippendorff_alpha(v, v, AlphaLevel::interval) == 1.0);
}

TEST_CASE("krippendorff_alpha nominal hand fixture is 2/3") {
  const std::vector<int> gold{0, 0, 1, 2};
  const std::vector<int> pred{0, 1, 1, 2};
  const auto a = krippendorff_alpha(gold, pred, AlphaLevel::nominal);
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("krippendorff_alpha undefined without variance") {
  const std::vector<int> v{0, 0, 0};
  CHECK_FALSE(krippendorff_alpha(v, v, AlphaLevel::nominal).has_value());
  CHECK_FALSE(krippendorff_alpha(v, v, AlphaLevel::interval).has_value());
}

TEST_CASE("alpha levels coincide on binary data") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 50; ++round) {
    const auto n = 2 + rng() % 30;
    std::vector<int> gold(n);
    std::vector<int> pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng() % 2);
      pred[i] = static_cast<int>(rng() % 2);
    }
    const auto nominal = krippendorff_alpha(gold, pred, AlphaLevel::nominal);
    const auto interval = krippendorff_alpha(gold, pred, AlphaLevel::interval);
    REQUIRE(nominal.has_value() == interval.has_value());
    if (nominal) {
      CHECK(*nominal == doctest::Approx(*interval).epsilon(1e-14));
    }
  }
}

TEST_CASE("kappa and alpha match the brute-force oracles") {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 200; ++round) {
    const auto n = 2 + rng() % 49; // lengths 2..50
    const auto gold = random_labels(rng, n);
    const auto pred = random_labels(rng, n);

    const auto k = cohens_kappa(gold, pred);
    if (k) {
      CHECK(std::abs(*k - oracle::kappa(gold, pred)) <= 1e-10);
    }

    for (const bool interval : {false, true}) {
      const auto a = krippendorff_alpha(
          gold, pred, interval ? AlphaLevel::interval : AlphaLevel::nominal);
      const auto expected = oracle::alpha(gold, pred, interval);
      REQUIRE(a.has_value() == expected.has_value());
      if (a) {
        CHECK(std::abs(*a - *expected) <= 1e-10);
      }
    }
  }
}

TEST_CASE("metrics are invariant under joint permutation") {
  std::mt19937_64 rng(31);
  const auto n = 40;
  auto gold = random_labels(rng, n);
  auto pred = random_labels(rng, n);
  const auto k0 = cohens_kappa(gold, pred);
  const auto a0 = krippendorff_alpha(gold, pred, AlphaLevel::interval);
  const auto c0 = confusion_matrix(gold, pred, 4);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> gold_p(n);
  std::vector<int> pred_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold_p[i] = gold[order[i]];
    pred_p[i] = pred[order[i]];
  }
  CHECK(cohens_kappa(gold_p, pred_p) == k0);
  CHECK(krippendorff_alpha(gold_p, pred_p, AlphaLevel::interval) == a0);
  CHECK(confusion_matrix(gold_p, pred_p, 4) == c0);
}

TEST_CASE("confusion_matrix") {
  {
    const std::vector<int> gold{0, 1};
    const std::vector<int> pred{0, 1};
    const auto m = confusion_matrix(gold, pred, 4);
    CHECK(m[0][0] == 1);
    CHECK(m[1][1] == 1);
    CHECK(m[2][2] == 0);
  }
  {
    const std::vector<int> gold{3};
    const std::vector<int> pred{0};
    const auto m = confusion_matrix(gold, pred, 4);
    CHECK(m[3][0] == 1);
  }
  {
    const std::vector<int> none;
    const auto m = confusion_matrix(none, none, 4);
    for (const auto &row : m) {
      for (const auto cell : row) {
        CHECK(cell == 0);
      }
    }
  }
  {
    const std::vector<int> gold{4};
    const std::vector<int> pred{0};
    CHECK_THROWS_AS(confusion_matrix(gold, pred, 4), std::out_of_range);
  }
}

TEST_CASE("agreement_report on an all-correct run") {
  std::vector<Judgment> judgments;
  for (int label = 0; label <= 3; ++label) {
    judgments.push_back(make_judgment(label, label));
  }
  const auto report = agreement_report(judgments);
  CHECK(report.n_ok == 4);
  CHECK(report.n_errored == 0);
  CHECK(*report.binary_kappa == 1.0);
  CHECK(*report.fourscale_kappa == 1.0);
  CHECK(*report.alpha_nominal == 1.0);
  CHECK(*report.alpha_interval == 1.0);
}

TEST_CASE("agreement_report excludes errored judgments") {
  std::vector<Judgment> judgments;
  for (int i = 0; i < 10; ++i) {
    judgments.push_back(make_judgment(i % 4, (i + 1) % 4));
  }
  judgments.push_back(make_judgment(2, std::nullopt));
  judgments.push_back(make_judgment(3, std::nullopt));
  const auto report = agreement_report(judgments);
  CHECK(report.n_ok == 10);
  CHECK(report.n_errored == 2);
  std::uint64_t total = 0;
  for (const auto &row : report.confusion) {
    for (const auto cell : row) {
      total += cell;
    }
  }
  CHECK(total == 10);
  std::uint64_t binary_total = 0;
  for (const auto &row : report.binary_confusion) {
    for (const auto cell : row) {
      binary_total += cell;
    }
  }
  CHECK(binary_total == 10);
}

TEST_CASE("agreement_report requires at least one ok judgment") {
  std::vector<Judgment> judgments{make_judgment(1, std::nullopt)};
  CHECK_THROWS_AS(agreement_report(judgments), std::invalid_argument);
  CHECK_THROWS_AS(agreement_report({}), std::invalid_argument);
}
