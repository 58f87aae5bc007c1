#include "miml/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace miml {

double bce_image(const LabelVector& t, const std::vector<double>& yhat) {
    if (t.size() != yhat.size())
        throw std::invalid_argument("bce_image: label/prediction length mismatch");
    double loss = 0.0;
    for (std::size_t k = 0; k < yhat.size(); ++k) {
        double tk = t.bits[k] ? 1.0 : 0.0;
        loss -= tk * std::log(yhat[k]) + (1.0 - tk) * std::log(1.0 - yhat[k]);
    }
    return loss;
}

double selfpaced_loss(const std::vector<double>& alpha, const std::vector<double>& xi_norm,
                      const std::vector<double>& yhat) {
    if (alpha.size() != xi_norm.size() || alpha.size() != yhat.size())
        throw std::invalid_argument("selfpaced_loss: shape mismatch");
    double loss = 0.0;
    for (std::size_t k = 0; k < yhat.size(); ++k)
        loss -= alpha[k] * xi_norm[k] * std::log(yhat[k]) +
                (1.0 - xi_norm[k]) * std::log(1.0 - yhat[k]);
    return loss;
}

SelfPacedGrads selfpaced_grads(const std::vector<double>& alpha,
                               const std::vector<double>& xi_norm,
                               const std::vector<double>& yhat, DispatcherGradient mode,
                               const std::vector<std::vector<double>>* dispatch_jac) {
    std::size_t n = alpha.size();
    if (xi_norm.size() != n || yhat.size() != n)
        throw std::invalid_argument("selfpaced_grads: shape mismatch");
    if (mode == DispatcherGradient::full && dispatch_jac == nullptr)
        throw std::invalid_argument("selfpaced_grads: full mode needs the dispatch Jacobian");

    SelfPacedGrads g;
    g.d_yhat.resize(n);
    g.d_alpha.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        g.d_yhat[k] = -alpha[k] * xi_norm[k] / yhat[k] + (1.0 - xi_norm[k]) / (1.0 - yhat[k]);
        g.d_alpha[k] = -xi_norm[k] * std::log(yhat[k]);
    }
    if (mode == DispatcherGradient::full) {
        // dL/dxi_k, then the chain through xi(alpha).
        for (std::size_t col = 0; col < n; ++col) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                double dl_dxi = -alpha[k] * std::log(yhat[k]) + std::log(1.0 - yhat[k]);
                acc += dl_dxi * (*dispatch_jac)[k][col];
            }
            g.d_alpha[col] += acc;
        }
    }
    return g;
}

}  // namespace miml
