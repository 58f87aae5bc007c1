#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace miml {

// Multi-hot label vector over K classes.
struct LabelVector {
    std::vector<uint8_t> bits;

    LabelVector() = default;
    explicit LabelVector(std::size_t k) : bits(k, 0) {}
    explicit LabelVector(std::vector<uint8_t> b) : bits(std::move(b)) {}

    std::size_t size() const { return bits.size(); }
    int popcount() const {
        int n = 0;
        for (uint8_t b : bits) n += b != 0;
        return n;
    }
    bool operator==(const LabelVector& o) const { return bits == o.bits; }
};

struct Instance {
    int index = 0;
    std::vector<double> features;
    // Synthetic oracle only; never read by training.
    std::optional<LabelVector> truth;
};

struct Bag {
    std::string id;
    std::vector<Instance> instances;
    LabelVector label;
};

using Dataset = std::vector<Bag>;

// Per-class probabilities, each strictly inside (0,1).
struct Prediction {
    std::vector<double> probs;
};

struct PseudoLabel {
    std::vector<double> xi_raw;
    std::vector<double> xi_norm;
};

enum class Granularity { label_level, instance_level };
enum class InitMode { global_freq, per_sample_freq };
enum class DispatcherGradient { detached, full };

struct TrainConfig {
    double tau = 0.5;
    int coexist_c = 3;
    double lr_theta = 5e-3;
    double lr_alpha_base = 5e-3;
    int batch_size = 32;
    int epochs = 10;
    int sample_count = 8;       // M; <= 0 means "all"
    Granularity granularity = Granularity::label_level;
    InitMode init_mode = InitMode::global_freq;
    bool use_sampler = true;
    bool use_dispatcher = true;
    bool use_coefficients = true;
    DispatcherGradient dispatcher_gradient = DispatcherGradient::detached;
    uint64_t seed = 0;
    double prob_clamp = 1e-7;
    double sampling_epsilon = 1e-6;
    std::vector<int> hidden_layers = {32, 32};

    void validate(int num_classes) const {
        if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
        if (coexist_c < 1 || coexist_c > num_classes)
            throw std::invalid_argument("C must satisfy 1 <= C <= K");
        if (lr_theta <= 0.0 || lr_alpha_base <= 0.0)
            throw std::invalid_argument("learning rates must be positive");
        if (!(prob_clamp > 0.0 && prob_clamp < 0.5))
            throw std::invalid_argument("prob_clamp must be in (0, 0.5)");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    }
};

// Persistent learnable confidence weights, one entry per (bag, instance).
// label_level stores a length-K vector, instance_level a single scalar.
class WeightStore {
public:
    WeightStore() = default;
    WeightStore(Granularity g, int num_classes, double lower_clip = -1.0)
        : granularity_(g), num_classes_(num_classes), lower_clip_(lower_clip) {}

    Granularity granularity() const { return granularity_; }
    int num_classes() const { return num_classes_; }
    double lower_clip() const { return lower_clip_; }

    void set(const std::string& bag_id, int j, std::vector<double> value);

    // Broadcast read: always length K.
    std::vector<double> get(const std::string& bag_id, int j) const;

    // alpha <- max(lower_clip, alpha - eta*gradient). instance_level first
    // reduces the gradient by mean over classes.
    void update(const std::string& bag_id, int j, const std::vector<double>& gradient,
                double eta);

    bool contains(const std::string& bag_id, int j) const {
        return values_.count({bag_id, j}) != 0;
    }
    std::size_t size() const { return values_.size(); }

    // Deterministic iteration order for serialization.
    const std::map<std::pair<std::string, int>, std::vector<double>>& entries() const {
        return values_;
    }
    std::map<std::pair<std::string, int>, std::vector<double>>& entries() { return values_; }

private:
    Granularity granularity_ = Granularity::label_level;
    int num_classes_ = 0;
    double lower_clip_ = -1.0;
    std::map<std::pair<std::string, int>, std::vector<double>> values_;
};

}  // namespace miml
