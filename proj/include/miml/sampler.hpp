#pragma once

#include <map>
#include <random>
#include <vector>

#include "miml/types.hpp"

namespace miml {

// Softmax over a full vector.
std::vector<double> softmax(const std::vector<double>& logits);

// Label-frequency initialization shared by the whole dataset: per-class
// positive counts over all bags divided by the total positive count, then
// softmax along the label dimension.
std::vector<double> init_global_freq(const Dataset& dataset);

// Per-bag variant: counts over the bag's own label set.
std::map<std::string, std::vector<double>> init_per_sample_freq(const Dataset& dataset);

// Instance-level initialization: instances grouped by identical bag-label
// pattern, scalar weight = softmax over groups of group-size fractions.
std::map<std::pair<std::string, int>, double> init_instance_level(const Dataset& dataset);

// Fills the store according to granularity and init mode.
void initialize_store(WeightStore& store, const Dataset& dataset, InitMode init_mode);

// Sampling score: max over classes of ReLU(alpha_k) * t_k.
double score(const std::vector<double>& alpha, const LabelVector& t);

// min(M, N) distinct indices, drawn without replacement with probability
// proportional to score + epsilon; uniform when all mass is zero.
std::vector<int> sample_instances(const std::vector<double>& scores, int m,
                                  double epsilon, std::mt19937_64& rng);

// Deterministic per-bag sampling stream derived from (seed, epoch, bag_id).
std::mt19937_64 bag_rng(uint64_t seed, int epoch, const std::string& bag_id);

}  // namespace miml
