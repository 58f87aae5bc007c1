#pragma once

#include <vector>

#include "miml/types.hpp"

namespace miml {

// Image-level binary cross-entropy against the multi-hot label.
double bce_image(const LabelVector& t, const std::vector<double>& yhat);

// Dynamic self-paced loss:
// -sum_k [ alpha_k * xi_k * log(yhat_k) + (1 - xi_k) * log(1 - yhat_k) ].
double selfpaced_loss(const std::vector<double>& alpha, const std::vector<double>& xi_norm,
                      const std::vector<double>& yhat);

struct SelfPacedGrads {
    std::vector<double> d_yhat;
    std::vector<double> d_alpha;
};

// detached: xi_norm treated as constant in d_alpha.
// full: adds the chain through the dispatcher Jacobian (rows = xi outputs).
SelfPacedGrads selfpaced_grads(const std::vector<double>& alpha,
                               const std::vector<double>& xi_norm,
                               const std::vector<double>& yhat, DispatcherGradient mode,
                               const std::vector<std::vector<double>>* dispatch_jac = nullptr);

}  // namespace miml
