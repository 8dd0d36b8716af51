#pragma once

#include "usdl/nethead.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace usdl::detail {

inline void add_into(std::span<const std::span<double>> dst, std::span<const std::span<const double>> src) {
    for (std::size_t a = 0; a < dst.size(); ++a)
        for (std::size_t i = 0; i < dst[a].size(); ++i) dst[a][i] += src[a][i];
}

inline void fill_arrays(std::span<const std::span<double>> arrays, double value) {
    for (auto a : arrays) std::fill(a.begin(), a.end(), value);
}

inline void scale_arrays(std::span<const std::span<double>> arrays, double factor) {
    for (auto a : arrays)
        for (double& v : a) v *= factor;
}

// Shuffled minibatch Adam. `sample_grad(index, grad_accum)` adds one sample's
// gradient into `grad_accum` and returns its loss. Samples within a batch are
// reduced in shuffled-index order, so results are reproducible for a seed.
template <class Params, class SampleGrad>
std::vector<double> minibatch_adam(Params& params, Params grad, std::size_t n, const TrainConfig& config, Rng& rng,
                                   SampleGrad&& sample_grad) {
    AdamState state = AdamState::for_arrays(std::as_const(params).arrays());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            auto grad_arrays = grad.arrays();
            fill_arrays(grad_arrays, 0.0);
            for (std::size_t i = start; i < end; ++i) epoch_loss += sample_grad(order[i], grad);
            scale_arrays(grad_arrays, 1.0 / static_cast<double>(end - start));
            adam_step(params.arrays(), std::as_const(grad).arrays(), state, config);
        }
        history.push_back(epoch_loss / static_cast<double>(n));
    }
    return history;
}

}  // namespace usdl::detail
