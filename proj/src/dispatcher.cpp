#include "miml/dispatcher.hpp"

#include <algorithm>
#include <cmath>

namespace miml {

namespace {

struct Masked {
    std::vector<double> xi;
    std::size_t argmax = 0;
    std::size_t argmin = 0;
};

Masked masked_weights(const std::vector<double>& alpha, const LabelVector& t) {
    if (alpha.size() != t.size())
        throw std::invalid_argument("dispatch: alpha/label length mismatch");
    if (t.popcount() == 0)
        throw std::invalid_argument("dispatch: bag label has no positive class");
    Masked m;
    m.xi.resize(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        m.xi[k] = t.bits[k] ? std::max(0.0, alpha[k]) : 0.0;
        if (m.xi[k] > m.xi[m.argmax]) m.argmax = k;
        if (m.xi[k] < m.xi[m.argmin]) m.argmin = k;
    }
    return m;
}

}  // namespace

PseudoLabel dispatch(const std::vector<double>& alpha, const LabelVector& t) {
    Masked m = masked_weights(alpha, t);
    PseudoLabel out;
    out.xi_raw = m.xi;
    double lo = m.xi[m.argmin], hi = m.xi[m.argmax];
    out.xi_norm.resize(m.xi.size());
    if (hi > lo) {
        for (std::size_t k = 0; k < m.xi.size(); ++k)
            out.xi_norm[k] = (m.xi[k] - lo) / (hi - lo);
    } else {
        for (std::size_t k = 0; k < m.xi.size(); ++k)
            out.xi_norm[k] = t.bits[k] ? 1.0 : 0.0;
    }
    return out;
}

std::vector<std::vector<double>> dispatch_jacobian(const std::vector<double>& alpha,
                                                   const LabelVector& t) {
    Masked m = masked_weights(alpha, t);
    std::size_t n = m.xi.size();
    std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
    double lo = m.xi[m.argmin], hi = m.xi[m.argmax];
    if (!(hi > lo)) return jac;  // fallback branch is piecewise constant

    double inv = 1.0 / (hi - lo);
    for (std::size_t k = 0; k < n; ++k) {
        double xibar = (m.xi[k] - lo) * inv;
        for (std::size_t col = 0; col < n; ++col) {
            double gate = (t.bits[col] && alpha[col] > 0.0) ? 1.0 : 0.0;
            if (gate == 0.0) continue;
            double d = 0.0;
            if (col == k) d += 1.0;
            if (col == m.argmin) d -= 1.0;
            if (col == m.argmax) d -= xibar;
            if (col == m.argmin) d += xibar;
            jac[k][col] = d * inv;
        }
    }
    return jac;
}

}  // namespace miml
