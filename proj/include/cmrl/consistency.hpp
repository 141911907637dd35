#ifndef CMRL_CONSISTENCY_HPP
#define CMRL_CONSISTENCY_HPP

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "cmrl/autograd.hpp"
#include "cmrl/datasets.hpp"
#include "cmrl/mlp.hpp"
#include "cmrl/params.hpp"
#include "cmrl/rng.hpp"
#include "cmrl/tensor.hpp"
#include "cmrl/time_grid.hpp"

namespace cmrl {

/// One-shot denoiser f(x, t, c) over the variance-exploding flow
/// x_t = x_0 + t z. The skip/output coefficients make f(x, eps, c) == x
/// hold structurally, not as a learned property:
///   c_skip(t) = sd^2 / ((t - eps)^2 + sd^2)
///   c_out(t)  = sd * (t - eps) / sqrt(sd^2 + t^2)
class ConsistencyModel {
public:
    ParamStore params;
    double T = 80.0;
    double eps = 0.002;
    double sigma_data = 0.5;
    int vocab = 0;
    int64_t data_dim = 0;
    std::vector<int64_t> hidden;
    int time_feature_dim = 8;
    int context_embed_dim = 8;

    ConsistencyModel() = default;
    ConsistencyModel(const ConsistencyModel& other);
    ConsistencyModel& operator=(const ConsistencyModel& other);
    ConsistencyModel(ConsistencyModel&& other) noexcept;
    ConsistencyModel& operator=(ConsistencyModel&& other) noexcept;

    static ConsistencyModel create(int64_t data_dim, int vocab, const std::vector<int64_t>& hidden,
                                   Rng& rng, double T = 80.0, double eps = 0.002,
                                   double sigma_data = 0.5, int time_feature_dim = 8,
                                   int context_embed_dim = 8);

    double c_skip(double t) const;
    double c_out(double t) const;
    /// Input preconditioning 1/sqrt(t^2 + sd^2), keeps the net's input O(1)
    /// across noise scales.
    double c_in(double t) const;

    Tensor apply(const Tensor& x, double t, int context) const;
    /// Same map under an alternative parameter set (EMA target nets).
    Tensor apply_with(const ParamStore& alt_params, const Tensor& x, double t, int context) const;
    /// Tape-recorded apply for gradients w.r.t. this model's parameters.
    /// Requires t > eps (the boundary short-circuit has no parameters).
    ValueId apply_taped(Tape& tape, const Tensor& x, double t, int context);

    MlpSpec mlp_spec() const;

    uint64_t forward_calls() const { return forward_calls_.load(std::memory_order_relaxed); }
    void reset_forward_calls() { forward_calls_.store(0, std::memory_order_relaxed); }

    ConsistencyModel clone() const;

private:
    Tensor net_forward(const ParamStore& ps, const Tensor& x, double t, int context) const;
    mutable std::atomic<uint64_t> forward_calls_{0};
};

/// x_t = x_0 + t z; the marginal of the VE forward process.
Tensor forward_noise(const Tensor& x0, double t, const Tensor& z);

enum class CTMetric { squared_l2, pseudo_huber };

struct CTConfig {
    int discretization = 16;  // N grid points spanning [eps, T]
    double ema_decay = 0.95;
    CTMetric metric = CTMetric::squared_l2;
    double huber_c = 0.03;
    int iterations = 4000;
    int batch_size = 64;
    double lr = 1e-3;
};

struct PretrainResult {
    std::vector<double> loss_history;  // one entry per iteration
};

/// Consistency training: adjacent-time self-consistency regression against
/// an EMA target copy. Returns the per-iteration loss history; the model is
/// trained in place.
PretrainResult ct_pretrain(ConsistencyModel& model, const Dataset& dataset, const CTConfig& cfg,
                           Rng& rng);

}  // namespace cmrl

#endif
