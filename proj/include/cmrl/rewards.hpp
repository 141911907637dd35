#ifndef CMRL_REWARDS_HPP
#define CMRL_REWARDS_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "cmrl/datasets.hpp"
#include "cmrl/params.hpp"
#include "cmrl/tensor.hpp"

namespace cmrl {

/// Black-box reward: a deterministic scalar score of (terminal sample,
/// context). The trainer never asks it for gradients. `pure` marks it safe
/// for parallel evaluation.
struct RewardFn {
    std::string name;
    bool pure = true;
    std::function<double(const Tensor&, int)> fn;

    double operator()(const Tensor& sample, int context) const { return fn(sample, context); }
};

/// Counts reward evaluations — the sample-complexity unit reported in
/// metrics. Exactly one increment per call.
class QueryCounter {
public:
    explicit QueryCounter(RewardFn fn) : fn_(std::move(fn)) {}

    double operator()(const Tensor& sample, int context) const {
        count_.fetch_add(1, std::memory_order_relaxed);
        return fn_(sample, context);
    }

    uint64_t count() const { return count_.load(std::memory_order_relaxed); }
    const RewardFn& inner() const { return fn_; }
    bool pure() const { return fn_.pure; }

private:
    RewardFn fn_;
    mutable std::atomic<uint64_t> count_{0};
};

/// Transform-coding size proxy for a grayscale image with values in [0,1]:
/// 8-bit quantization, blockwise 8x8 orthonormal DCT-II, uniform coefficient
/// quantization (step `quant_step`), and an ideal-entropy-coder estimate
///     8 + ceil(n_symbols * H / 8) bytes
/// where H is the empirical Shannon entropy (bits/symbol) of the quantized
/// coefficient stream. Images whose sides are not multiples of 8 are padded
/// by edge replication. Values outside [0,1] are a contract error.
double compress_proxy_size(const Tensor& image, int h, int w, double quant_step = 16.0);

RewardFn reward_compress(int h, int w);
RewardFn reward_incompress(int h, int w);

/// -||x - g_c||, goal points taken from the 2-D mixture's component means.
RewardFn reward_target2d(const Mixture2D& dataset);

/// Frozen, seeded random MLP scorer standing in for an external learned
/// predictor. Deterministic given (sample, context, scorer seed); exposes no
/// gradients.
RewardFn reward_blackbox_mlp(int64_t input_dim, int vocab, uint64_t scorer_seed);

/// Task rewards as selected by name on the CLI. Image tasks clamp the raw
/// model output into [0,1] before scoring, since generated samples are
/// unconstrained reals.
RewardFn make_task_reward(const std::string& task, const Dataset& dataset, uint64_t scorer_seed);

}  // namespace cmrl

#endif
