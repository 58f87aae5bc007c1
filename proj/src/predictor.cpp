#include "miml/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace miml {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::size_t param_count(const std::vector<int>& layers) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        n += static_cast<std::size_t>(layers[l]) * layers[l + 1] + layers[l + 1];
    return n;
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, double prob_clamp)
    : layers_(std::move(layer_sizes)), prob_clamp_(prob_clamp) {
    if (layers_.size() < 2) throw std::invalid_argument("Mlp needs >= 2 layer sizes");
    for (int s : layers_)
        if (s < 1) throw std::invalid_argument("Mlp layer sizes must be positive");
    theta_.assign(param_count(layers_), 0.0);
}

void Mlp::init_weights(std::mt19937_64& rng) {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        int fan_in = layers_[l];
        int fan_out = layers_[l + 1];
        double bound = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (int i = 0; i < fan_in * fan_out; ++i) theta_[off++] = dist(rng);
        off += static_cast<std::size_t>(fan_out);  // biases stay zero
    }
}

Mlp::Trace Mlp::forward(const std::vector<double>& features) const {
    if (static_cast<int>(features.size()) != layers_.front())
        throw std::invalid_argument("Mlp::predict: feature dimension mismatch");
    Trace tr;
    tr.activations.push_back(features);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        int fan_in = layers_[l];
        int fan_out = layers_[l + 1];
        const std::vector<double>& in = tr.activations.back();
        std::vector<double> pre(static_cast<std::size_t>(fan_out));
        for (int o = 0; o < fan_out; ++o) {
            double z = theta_[off + static_cast<std::size_t>(fan_in) * fan_out + o];  // bias
            for (int i = 0; i < fan_in; ++i)
                z += theta_[off + static_cast<std::size_t>(i) * fan_out + o] * in[i];
            pre[static_cast<std::size_t>(o)] = z;
        }
        off += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
        bool last = l + 2 == layers_.size();
        std::vector<double> act(pre.size());
        for (std::size_t o = 0; o < pre.size(); ++o)
            act[o] = last ? logistic(pre[o]) : std::max(0.0, pre[o]);
        tr.preacts.push_back(std::move(pre));
        tr.activations.push_back(std::move(act));
    }
    return tr;
}

Prediction Mlp::predict(const std::vector<double>& features) const {
    Trace tr = forward(features);
    Prediction p;
    p.probs = tr.activations.back();
    for (double& v : p.probs) {
        if (v < prob_clamp_) v = prob_clamp_;
        if (v > 1.0 - prob_clamp_) v = 1.0 - prob_clamp_;
    }
    return p;
}

std::vector<double> Mlp::backward(const std::vector<double>& features,
                                  const std::vector<double>& upstream) const {
    if (static_cast<int>(upstream.size()) != layers_.back())
        throw std::invalid_argument("Mlp::backward: upstream dimension mismatch");
    Trace tr = forward(features);

    std::vector<double> grad(theta_.size(), 0.0);

    // Output layer: d/dz of logistic.
    std::vector<double> delta(upstream.size());
    const std::vector<double>& yout = tr.activations.back();
    for (std::size_t o = 0; o < delta.size(); ++o)
        delta[o] = upstream[o] * yout[o] * (1.0 - yout[o]);

    // Layer offsets into theta.
    std::vector<std::size_t> offsets(layers_.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(layers_[l]) * layers_[l + 1] + layers_[l + 1];
    }

    for (std::size_t l = layers_.size() - 2;; --l) {
        int fan_in = layers_[l];
        int fan_out = layers_[l + 1];
        const std::vector<double>& in = tr.activations[l];
        std::size_t base = offsets[l];
        for (int o = 0; o < fan_out; ++o) {
            for (int i = 0; i < fan_in; ++i)
                grad[base + static_cast<std::size_t>(i) * fan_out + o] += delta[o] * in[i];
            grad[base + static_cast<std::size_t>(fan_in) * fan_out + o] += delta[o];
        }
        if (l == 0) break;
        std::vector<double> prev(static_cast<std::size_t>(fan_in), 0.0);
        for (int i = 0; i < fan_in; ++i) {
            if (tr.preacts[l - 1][static_cast<std::size_t>(i)] <= 0.0) continue;
            double acc = 0.0;
            for (int o = 0; o < fan_out; ++o)
                acc += theta_[base + static_cast<std::size_t>(i) * fan_out + o] * delta[o];
            prev[static_cast<std::size_t>(i)] = acc;
        }
        delta = std::move(prev);
    }
    return grad;
}

void adam_step(AdamState& state, std::vector<double>& theta,
               const std::vector<double>& gradient, double lr) {
    if (gradient.size() != theta.size())
        throw std::invalid_argument("adam_step: gradient/theta size mismatch");
    for (double g : gradient)
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
    if (state.m.empty()) state.m.assign(theta.size(), 0.0);
    if (state.v.empty()) state.v.assign(theta.size(), 0.0);
    if (state.m.size() != theta.size() || state.v.size() != theta.size())
        throw std::invalid_argument("adam_step: moment size mismatch");

    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * gradient[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * gradient[i] * gradient[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace miml
