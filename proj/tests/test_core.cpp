#include "doctest.h"
#include "miml/types.hpp"

#include <random>

using namespace miml;

TEST_CASE("label-level get is an identity read") {
    WeightStore ws(Granularity::label_level, 3);
    ws.set("b0", 0, {0.3, -0.2, 0.5});
    auto v = ws.get("b0", 0);
    CHECK(v == std::vector<double>{0.3, -0.2, 0.5});
}

TEST_CASE("instance-level get broadcasts the scalar") {
    WeightStore ws(Granularity::instance_level, 3);
    ws.set("b0", 0, {0.4});
    auto v = ws.get("b0", 0);
    CHECK(v == std::vector<double>{0.4, 0.4, 0.4});
}

TEST_CASE("missing entry raises") {
    WeightStore ws(Granularity::label_level, 3);
    CHECK_THROWS_AS(ws.get("nope", 7), std::out_of_range);
    CHECK_THROWS_AS(ws.update("nope", 7, {0, 0, 0}, 1.0), std::out_of_range);
}

TEST_CASE("update takes one descent step") {
    WeightStore ws(Granularity::label_level, 1);
    ws.set("b", 0, {0.5});
    ws.update("b", 0, {0.2}, 1.0);
    CHECK(ws.get("b", 0)[0] == doctest::Approx(0.3));
}

TEST_CASE("update clips at the lower bound") {
    WeightStore ws(Granularity::label_level, 1);
    ws.set("b", 0, {-0.95});
    ws.update("b", 0, {0.2}, 1.0);
    CHECK(ws.get("b", 0)[0] == doctest::Approx(-1.0));
}

TEST_CASE("instance-level update mean-reduces the gradient") {
    WeightStore ws(Granularity::instance_level, 3);
    ws.set("b", 0, {0.4});
    ws.update("b", 0, {0.3, 0.1, 0.2}, 1.0);
    CHECK(ws.get("b", 0)[0] == doctest::Approx(0.2));
}

TEST_CASE("non-finite gradient is rejected") {
    WeightStore ws(Granularity::label_level, 1);
    ws.set("b", 0, {0.5});
    CHECK_THROWS_AS(ws.update("b", 0, {std::nan("")}, 1.0), std::runtime_error);
}

TEST_CASE("values never fall below lower_clip under random update sequences") {
    std::mt19937_64 rng(7);
    WeightStore ws(Granularity::label_level, 4, -1.0);
    ws.set("b", 0, {0.1, 0.2, 0.3, 0.4});
    std::uniform_real_distribution<double> g(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        ws.update("b", 0, {g(rng), g(rng), g(rng), g(rng)}, 0.5);
        for (double v : ws.get("b", 0)) CHECK(v >= -1.0);
    }
}

TEST_CASE("write then read returns the written value") {
    WeightStore ws(Granularity::label_level, 2);
    ws.set("b", 3, {0.9, -0.4});
    CHECK(ws.get("b", 3) == std::vector<double>{0.9, -0.4});
    ws.set("b", 3, {0.1, 0.2});
    CHECK(ws.get("b", 3) == std::vector<double>{0.1, 0.2});
}

TEST_CASE("config validation rejects out-of-range values") {
    TrainConfig cfg;
    cfg.tau = 1.5;
    CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.coexist_c = 9;
    CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.prob_clamp = 0.7;
    CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
    cfg = TrainConfig{};
    CHECK_NOTHROW(cfg.validate(8));
}
