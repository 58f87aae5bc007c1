#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "miml/types.hpp"

namespace miml {

// Feed-forward net: rectifier hidden layers, logistic outputs. Parameters are
// stored flat so the optimizer and checkpoints see one vector.
class Mlp {
public:
    Mlp() = default;
    // layer_sizes = {D, hidden..., K}
    explicit Mlp(std::vector<int> layer_sizes, double prob_clamp = 1e-7);

    void init_weights(std::mt19937_64& rng);

    Prediction predict(const std::vector<double>& features) const;

    // Gradient of upstream^T * predict(features) with respect to theta.
    std::vector<double> backward(const std::vector<double>& features,
                                 const std::vector<double>& upstream) const;

    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<int>& layer_sizes() const { return layers_; }
    int input_dim() const { return layers_.front(); }
    int output_dim() const { return layers_.back(); }
    double prob_clamp() const { return prob_clamp_; }

private:
    struct Trace {
        std::vector<std::vector<double>> activations;  // post-activation per layer
        std::vector<std::vector<double>> preacts;      // pre-activation per layer > 0
    };
    Trace forward(const std::vector<double>& features) const;

    std::vector<int> layers_;
    std::vector<double> theta_;
    double prob_clamp_ = 1e-7;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(AdamState& state, std::vector<double>& theta,
               const std::vector<double>& gradient, double lr);

}  // namespace miml
