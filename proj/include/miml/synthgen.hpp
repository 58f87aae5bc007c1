#pragma once

#include <cstdint>
#include <string>

#include "miml/types.hpp"

namespace miml {

struct SynthConfig {
    int num_classes = 8;
    int feature_dim = 16;
    int bags = 100;
    int instances_min = 8;
    int instances_max = 24;
    int max_labels = 3;
    double noise_fraction = 0.3;
    double class_separation = 2.0;
    uint64_t seed = 0;
};

// Bags with known instance-level truth. Signal instances draw features around
// the mean of their truth classes' prototypes (one-hot corners scaled by
// class_separation, unit covariance); noise instances draw from the background
// Gaussian and carry empty truth. Union of instance truths equals the bag label.
Dataset generate(const SynthConfig& cfg);

void write_bags(const Dataset& bags, int num_classes, int feature_dim,
                const std::string& path);

struct BagFile {
    int num_classes = 0;
    int feature_dim = 0;
    Dataset bags;
};

BagFile read_bags(const std::string& path);

}  // namespace miml
