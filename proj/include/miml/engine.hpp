#pragma once

#include <string>
#include <vector>

#include "miml/metrics.hpp"
#include "miml/predictor.hpp"
#include "miml/types.hpp"

namespace miml {

// Per-bag multiplier on the weight learning rate: |t|_1 * C / K.
double label_aware_lambda(const LabelVector& t, int coexist_c, int num_classes);

struct Aggregate {
    std::vector<double> scores;  // class-wise max over instances
    LabelVector labels;          // scores > tau, strict
};

Aggregate aggregate(const std::vector<Prediction>& instance_preds, double tau);

struct TrainState {
    TrainConfig config;
    int num_classes = 0;
    int feature_dim = 0;
    Mlp predictor;
    AdamState adam;
    WeightStore weights;
    int epoch = 0;
};

// Builds predictor + weight store and runs the configured initialization.
TrainState init_state(const Dataset& dataset, const TrainConfig& cfg, int num_classes,
                      int feature_dim);

// One pass over the dataset; returns the mean per-instance loss.
double train_epoch(const Dataset& dataset, TrainState& state);

// Aggregates over all instances of every bag (no sampling) and scores
// against the bag labels. Never touches the weight store.
MetricsReport evaluate(const Dataset& dataset, const TrainState& state, double tau);

uint64_t config_hash(const TrainConfig& cfg);

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace miml
