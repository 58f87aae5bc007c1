#include "doctest.h"
#include "miml/engine.hpp"
#include "miml/loss.hpp"
#include "miml/synthgen.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace miml;

namespace {

SynthConfig small_synth(uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.num_classes = 4;
    cfg.feature_dim = 8;
    cfg.bags = 40;
    cfg.instances_min = 3;
    cfg.instances_max = 8;
    cfg.max_labels = 2;
    cfg.noise_fraction = 0.2;
    cfg.class_separation = 3.0;
    cfg.seed = seed;
    return cfg;
}

TrainConfig quick_cfg(uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 3;
    cfg.sample_count = 4;
    cfg.batch_size = 8;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("label-aware lambda formula and monotonicity") {
    LabelVector t(std::vector<uint8_t>{1, 1, 0, 0, 0, 0, 0, 0});
    CHECK(label_aware_lambda(t, 6, 8) == doctest::Approx(1.5));
    CHECK(label_aware_lambda(t, 7, 8) > label_aware_lambda(t, 6, 8));
    LabelVector t3(std::vector<uint8_t>{1, 1, 1, 0, 0, 0, 0, 0});
    CHECK(label_aware_lambda(t3, 6, 8) > label_aware_lambda(t, 6, 8));
    CHECK_THROWS_AS(label_aware_lambda(t, 9, 8), std::invalid_argument);
    CHECK_THROWS_AS(label_aware_lambda(t, 0, 8), std::invalid_argument);
}

TEST_CASE("aggregate max-pools and thresholds strictly") {
    std::vector<Prediction> preds = {{{0.2, 0.2}}, {{0.7, 0.3}}, {{0.4, 0.2}}};
    Aggregate agg = aggregate(preds, 0.5);
    CHECK(agg.scores[0] == doctest::Approx(0.7));
    CHECK(agg.labels.bits[0] == 1);
    CHECK(agg.labels.bits[1] == 0);

    // Exactly tau is below the strict threshold.
    Aggregate at_tau = aggregate({{{0.5}}}, 0.5);
    CHECK(at_tau.labels.bits[0] == 0);

    Aggregate single = aggregate({{{0.9, 0.1}}}, 0.5);
    CHECK(single.scores == std::vector<double>{0.9, 0.1});

    CHECK_THROWS_AS(aggregate({}, 0.5), std::invalid_argument);
}

TEST_CASE("raising tau never adds a predicted label") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Prediction> preds;
        for (int j = 0; j < 5; ++j) preds.push_back({testutil::random_vec(4, rng, 0.01, 0.99)});
        Aggregate lo = aggregate(preds, 0.3);
        Aggregate hi = aggregate(preds, 0.7);
        for (std::size_t k = 0; k < 4; ++k)
            if (hi.labels.bits[k]) CHECK(lo.labels.bits[k]);
    }
}

TEST_CASE("same seed reproduces identical epoch losses") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    TrainState a = init_state(d, cfg, 4, 8);
    TrainState b = init_state(d, cfg, 4, 8);
    for (int e = 0; e < 3; ++e) {
        double la = train_epoch(d, a);
        double lb = train_epoch(d, b);
        CHECK(la == lb);
    }
}

TEST_CASE("training reduces the mean instance loss") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    cfg.epochs = 10;
    TrainState st = init_state(d, cfg, 4, 8);
    double first = train_epoch(d, st);
    double last = 0.0;
    for (int e = 1; e < 10; ++e) last = train_epoch(d, st);
    CHECK(last < first);
}

TEST_CASE("evaluation does not mutate the weight store") {
    Dataset d = generate(small_synth());
    TrainState st = init_state(d, quick_cfg(), 4, 8);
    train_epoch(d, st);
    auto before = st.weights.entries();
    evaluate(d, st, 0.5);
    CHECK(st.weights.entries() == before);
}

TEST_CASE("all components off with unit weights reduces to plain BCE per instance") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    cfg.use_sampler = false;
    cfg.use_dispatcher = false;
    cfg.use_coefficients = false;
    TrainState st = init_state(d, cfg, 4, 8);
    for (const auto& [key, _] : st.weights.entries())
        st.weights.set(key.first, key.second, {1.0, 1.0, 1.0, 1.0});

    // With xi = t and alpha = 1 the per-instance self-paced loss is plain BCE.
    for (const Bag& bag : d)
        for (const Instance& inst : bag.instances) {
            Prediction p = st.predictor.predict(inst.features);
            std::vector<double> xi(4), ones(4, 1.0);
            for (std::size_t k = 0; k < 4; ++k) xi[k] = bag.label.bits[k] ? 1.0 : 0.0;
            CHECK(std::fabs(selfpaced_loss(ones, xi, p.probs) -
                            bce_image(bag.label, p.probs)) < 1e-12);
        }
}

TEST_CASE("instance-level granularity with the dispatcher is rejected") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    cfg.granularity = Granularity::instance_level;
    CHECK_THROWS_AS(init_state(d, cfg, 4, 8), std::invalid_argument);
    cfg.use_dispatcher = false;
    CHECK_NOTHROW(init_state(d, cfg, 4, 8));
}

TEST_CASE("instance-level training runs end to end") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    cfg.granularity = Granularity::instance_level;
    cfg.use_dispatcher = false;
    TrainState st = init_state(d, cfg, 4, 8);
    double loss = train_epoch(d, st);
    CHECK(std::isfinite(loss));
    MetricsReport r = evaluate(d, st, 0.5);
    CHECK(r.hamming_loss >= 0.0);
}

TEST_CASE("checkpoint round trip reproduces subsequent training exactly") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg(5);
    TrainState st = init_state(d, cfg, 4, 8);
    train_epoch(d, st);
    save_checkpoint(st, "engine_ckpt_a.ckpt");

    TrainState re = load_checkpoint("engine_ckpt_a.ckpt");
    CHECK(re.epoch == st.epoch);
    CHECK(re.predictor.theta() == st.predictor.theta());
    CHECK(re.weights.entries() == st.weights.entries());

    double l1 = train_epoch(d, st);
    double l2 = train_epoch(d, re);
    CHECK(l1 == l2);
    CHECK(st.predictor.theta() == re.predictor.theta());

    save_checkpoint(st, "engine_ckpt_b.ckpt");
    save_checkpoint(re, "engine_ckpt_c.ckpt");
    CHECK(slurp("engine_ckpt_b.ckpt") == slurp("engine_ckpt_c.ckpt"));
    std::remove("engine_ckpt_a.ckpt");
    std::remove("engine_ckpt_b.ckpt");
    std::remove("engine_ckpt_c.ckpt");
}

TEST_CASE("corrupt checkpoint header is rejected") {
    {
        std::ofstream out("engine_bad.ckpt");
        out << "#SOMETHING v9\n";
    }
    CHECK_THROWS_AS(load_checkpoint("engine_bad.ckpt"), std::runtime_error);
    std::remove("engine_bad.ckpt");
}

TEST_CASE("evaluate matches the metrics module on the same predictions") {
    Dataset d = generate(small_synth());
    TrainState st = init_state(d, quick_cfg(), 4, 8);
    train_epoch(d, st);
    MetricsReport from_engine = evaluate(d, st, 0.5);

    std::vector<LabelVector> truths, preds;
    std::vector<std::vector<double>> scores;
    for (const Bag& bag : d) {
        std::vector<Prediction> ip;
        for (const Instance& inst : bag.instances)
            ip.push_back(st.predictor.predict(inst.features));
        Aggregate agg = aggregate(ip, 0.5);
        truths.push_back(bag.label);
        preds.push_back(agg.labels);
        scores.push_back(agg.scores);
    }
    MetricsReport direct = compute_metrics(truths, preds, scores);
    CHECK(from_engine.to_kv_lines() == direct.to_kv_lines());
}

TEST_CASE("constant 0.5 predictor yields empty label sets at tau 0.5") {
    Dataset d = generate(small_synth());
    TrainConfig cfg = quick_cfg();
    TrainState st = init_state(d, cfg, 4, 8);
    // Zero parameters force logistic(0) = 0.5 everywhere.
    std::fill(st.predictor.theta().begin(), st.predictor.theta().end(), 0.0);
    for (const Bag& bag : d) {
        std::vector<Prediction> ip;
        for (const Instance& inst : bag.instances)
            ip.push_back(st.predictor.predict(inst.features));
        CHECK(aggregate(ip, 0.5).labels.popcount() == 0);
    }
}
