#pragma once

#include <vector>

#include "miml/types.hpp"

namespace miml {

// Soft pseudo-label from confidence weights and the bag label:
// xi_k = ReLU(alpha_k) * t_k, max-min normalized over all classes.
// Degenerate max == min falls back to xi_norm = t.
PseudoLabel dispatch(const std::vector<double>& alpha, const LabelVector& t);

// d(xi_norm)/d(alpha), K x K, row = output class, column = weight index.
// Arg-max/arg-min treated as locally constant; ReLU subgradient 0 at alpha <= 0.
// Degenerate inputs give the zero matrix.
std::vector<std::vector<double>> dispatch_jacobian(const std::vector<double>& alpha,
                                                   const LabelVector& t);

}  // namespace miml
