#include "nslab/adam.hpp"

#include "nslab/errors.hpp"

#include <cmath>

namespace nslab {

AdamState::AdamState(AdamHyper h, std::span<const std::span<double>> params) : hyper(h) {
    for (auto p : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

void adam_step(std::span<const std::span<double>> params, const std::vector<std::vector<double>>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: parameter/gradient/state count mismatch");
    const auto& h = state.hyper;
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        const auto& g = grads[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (g.size() != p.size() || m.size() != p.size())
            throw ShapeError("adam_step: array " + std::to_string(i) + " size mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
        }
    }
}

} // namespace nslab
