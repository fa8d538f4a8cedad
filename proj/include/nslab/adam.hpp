#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nslab {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;

    AdamState() = default;
    AdamState(AdamHyper h, std::span<const std::span<double>> params);
};

/// One bias-corrected Adam update of every parameter array in place.
void adam_step(std::span<const std::span<double>> params, const std::vector<std::vector<double>>& grads,
               AdamState& state);

} // namespace nslab
