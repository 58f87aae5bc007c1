#include "doctest.h"
#include "metric_oracles.hpp"
#include "miml/metrics.hpp"
#include "test_util.hpp"

#include <numeric>
#include <random>

using namespace miml;
using oracles::Case;
using oracles::random_case;

TEST_CASE("hamming loss hand values") {
    std::vector<LabelVector> t = {LabelVector({1, 0, 1})};
    CHECK(hamming_loss(t, {LabelVector({1, 1, 1})}) == doctest::Approx(1.0 / 3.0));
    CHECK(hamming_loss(t, t) == 0.0);
    CHECK(hamming_loss(t, {LabelVector({0, 1, 0})}) == 1.0);
    CHECK_THROWS_AS(hamming_loss(t, {}), std::invalid_argument);
}

TEST_CASE("one-error hand values") {
    CHECK(one_error({LabelVector({0, 1})}, {{0.9, 0.1}}) == 1.0);
    CHECK(one_error({LabelVector({1, 0})}, {{0.9, 0.1}}) == 0.0);
    // Tie breaks to the lowest index.
    CHECK(one_error({LabelVector({1, 0})}, {{0.5, 0.5}}) == 0.0);
    CHECK(one_error({LabelVector({0, 1})}, {{0.5, 0.5}}) == 1.0);
    CHECK_THROWS_AS(one_error({LabelVector({0, 0})}, {{0.5, 0.5}}), std::invalid_argument);
}

TEST_CASE("ranking loss hand values") {
    CHECK(ranking_loss({LabelVector({1, 0})}, {{0.9, 0.1}}) == 0.0);
    CHECK(ranking_loss({LabelVector({1, 0})}, {{0.1, 0.9}}) == 1.0);
    CHECK(ranking_loss({LabelVector({1, 0})}, {{0.3, 0.3}}) == 0.5);
    // Samples without both kinds of labels are skipped; all skipped raises.
    CHECK_THROWS_AS(ranking_loss({LabelVector({1, 1})}, {{0.9, 0.1}}), std::runtime_error);
}

TEST_CASE("per-sample AP hand values") {
    CHECK(average_precision_miml({LabelVector({1, 1, 0})}, {{0.9, 0.8, 0.1}}) == 1.0);
    // Single label ranked last of 4.
    CHECK(average_precision_miml({LabelVector({0, 0, 0, 1})}, {{0.9, 0.8, 0.7, 0.1}}) ==
          doctest::Approx(0.25));
}

TEST_CASE("micro-F1 hand value") {
    std::vector<LabelVector> t = {LabelVector({1, 0}), LabelVector({0, 1})};
    std::vector<LabelVector> p = {LabelVector({1, 1}), LabelVector({0, 1})};
    CHECK(f1_micro(t, p) == doctest::Approx(0.8));
}

TEST_CASE("perfect predictions score perfectly on every metric") {
    std::mt19937_64 rng(19);
    std::vector<LabelVector> t;
    std::vector<std::vector<double>> s;
    for (int i = 0; i < 20; ++i) {
        LabelVector lv = testutil::random_label(6, rng);
        if (lv.popcount() == 6) lv.bits[0] = 0;  // keep a negative for ranking loss
        if (lv.popcount() == 0) lv.bits[1] = 1;
        t.push_back(lv);
        std::vector<double> sc(6);
        for (std::size_t k = 0; k < 6; ++k) sc[k] = lv.bits[k] ? 0.9 : 0.1;
        s.push_back(std::move(sc));
    }
    MetricsReport r = compute_metrics(t, t, s);
    CHECK(r.hamming_loss == 0.0);
    CHECK(r.one_error == 0.0);
    CHECK(r.ranking_loss == 0.0);
    CHECK(r.average_precision == 1.0);
    CHECK(r.f1_micro == 1.0);
    CHECK(r.f1_macro == 1.0);
    CHECK(r.subset_accuracy == 1.0);
    CHECK(r.map == 1.0);
    CHECK(r.overall() == 1.0);
}

TEST_CASE("permuting samples leaves every metric unchanged") {
    std::mt19937_64 rng(23);
    Case c = random_case(rng);
    while (c.truths.size() < 5) c = random_case(rng);
    // Tie-breaking in the rank-based metrics is index-dependent, so break all
    // ties before permuting.
    std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
    for (auto& row : c.scores)
        for (double& v : row) v += jitter(rng);
    MetricsReport r1 = compute_metrics(c.truths, c.preds, c.scores);

    std::vector<std::size_t> perm(c.truths.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Case cp;
    for (std::size_t i : perm) {
        cp.truths.push_back(c.truths[i]);
        cp.preds.push_back(c.preds[i]);
        cp.scores.push_back(c.scores[i]);
    }
    MetricsReport r2 = compute_metrics(cp.truths, cp.preds, cp.scores);
    CHECK(r1.hamming_loss == doctest::Approx(r2.hamming_loss).epsilon(1e-12));
    CHECK(r1.one_error == doctest::Approx(r2.one_error).epsilon(1e-12));
    CHECK(r1.ranking_loss == doctest::Approx(r2.ranking_loss).epsilon(1e-12));
    CHECK(r1.average_precision == doctest::Approx(r2.average_precision).epsilon(1e-12));
    CHECK(r1.f1_micro == doctest::Approx(r2.f1_micro).epsilon(1e-12));
    CHECK(r1.f1_macro == doctest::Approx(r2.f1_macro).epsilon(1e-12));
    CHECK(r1.subset_accuracy == doctest::Approx(r2.subset_accuracy).epsilon(1e-12));
    CHECK(r1.map == doctest::Approx(r2.map).epsilon(1e-12));
}

TEST_CASE("all metrics equal their brute-force oracles on 1000 random cases") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 1000; ++trial) {
        Case c = random_case(rng);
        CHECK(std::fabs(hamming_loss(c.truths, c.preds) -
                        oracles::hamming(c.truths, c.preds)) < 1e-9);
        CHECK(std::fabs(one_error(c.truths, c.scores) -
                        oracles::one_error(c.truths, c.scores)) < 1e-9);
        CHECK(std::fabs(average_precision_miml(c.truths, c.scores) -
                        oracles::ap_miml(c.truths, c.scores)) < 1e-9);
        CHECK(std::fabs(f1_micro(c.truths, c.preds) -
                        oracles::f1_micro(c.truths, c.preds)) < 1e-9);
        CHECK(std::fabs(f1_macro(c.truths, c.preds) -
                        oracles::f1_macro(c.truths, c.preds)) < 1e-9);
        CHECK(std::fabs(subset_accuracy(c.truths, c.preds) -
                        oracles::subset_acc(c.truths, c.preds)) < 1e-9);
        CHECK(std::fabs(map_per_class(c.truths, c.scores) -
                        oracles::map(c.truths, c.scores)) < 1e-9);

        bool has_mixed = false;
        for (const LabelVector& lv : c.truths)
            if (lv.popcount() > 0 && lv.popcount() < static_cast<int>(lv.size()))
                has_mixed = true;
        if (has_mixed)
            CHECK(std::fabs(ranking_loss(c.truths, c.scores) -
                            oracles::ranking_loss(c.truths, c.scores)) < 1e-9);
    }
}

TEST_CASE("metrics stay in [0,1] on random inputs") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        Case c = random_case(rng);
        for (double v : {hamming_loss(c.truths, c.preds), one_error(c.truths, c.scores),
                         average_precision_miml(c.truths, c.scores),
                         f1_micro(c.truths, c.preds), f1_macro(c.truths, c.preds),
                         subset_accuracy(c.truths, c.preds),
                         map_per_class(c.truths, c.scores)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
