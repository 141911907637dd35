#ifndef CMRL_DIFFUSION_HPP
#define CMRL_DIFFUSION_HPP

#include <atomic>
#include <cstdint>
#include <vector>

#include "cmrl/autograd.hpp"
#include "cmrl/datasets.hpp"
#include "cmrl/metrics.hpp"
#include "cmrl/mlp.hpp"
#include "cmrl/rewards.hpp"
#include "cmrl/rng.hpp"
#include "cmrl/trainer.hpp"

namespace cmrl {

/// Noise-conditional denoiser over the same VE process as the consistency
/// model, with a geometric noise-level grid sigma_0 = T > ... >
/// sigma_H = eps. The long-horizon ancestral sampler over this grid is the
/// comparison baseline's generative policy.
class ScoreModel {
public:
    ParamStore params;
    std::vector<double> sigma_grid;  // H_diff + 1 levels, strictly decreasing
    double sigma_data = 0.5;
    int vocab = 0;
    int64_t data_dim = 0;
    std::vector<int64_t> hidden;
    int time_feature_dim = 8;
    int context_embed_dim = 8;

    ScoreModel() = default;
    ScoreModel(const ScoreModel& other);
    ScoreModel& operator=(const ScoreModel& other);
    ScoreModel(ScoreModel&& other) noexcept;
    ScoreModel& operator=(ScoreModel&& other) noexcept;

    static ScoreModel create(int64_t data_dim, int vocab, const std::vector<int64_t>& hidden,
                             int horizon, Rng& rng, double T = 80.0, double eps = 0.002,
                             double sigma_data = 0.5, int time_feature_dim = 8,
                             int context_embed_dim = 8);

    int horizon() const { return static_cast<int>(sigma_grid.size()) - 1; }

    /// MMSE-style denoiser estimate of x0.
    Tensor denoise(const Tensor& x, double sigma, int context) const;
    Tensor denoise_with(const ParamStore& alt, const Tensor& x, double sigma, int context) const;
    ValueId denoise_taped(Tape& tape, const Tensor& x, double sigma, int context);

    MlpSpec mlp_spec() const;
    uint64_t forward_calls() const { return forward_calls_.load(std::memory_order_relaxed); }
    void reset_forward_calls() { forward_calls_.store(0, std::memory_order_relaxed); }

private:
    mutable std::atomic<uint64_t> forward_calls_{0};
};

struct AncestralStep {
    Tensor next;
    Tensor mean;
    double stddev = 0.0;
};

/// One VE ancestral transition from s_hi to s_lo given a denoiser output:
///   mean = x + (s_hi^2 - s_lo^2) * score,  score = (denoised - x)/s_hi^2
///   std  = sqrt(s_lo^2 (s_hi^2 - s_lo^2) / s_hi^2)
AncestralStep ancestral_transition(const Tensor& x, const Tensor& denoised, double s_hi,
                                   double s_lo, const Tensor& z);

/// ancestral_transition between grid levels i and i+1 using the model's
/// denoiser; returned with mean and std so the policy density is evaluable.
AncestralStep ancestral_step(const ScoreModel& model, const Tensor& x, int level, int context,
                             const Tensor& z);

/// One denoising rollout recorded as a decision process; every transition
/// is stochastic, so there are exactly horizon() log-probs.
struct DiffusionTrajectory {
    int context = 0;
    std::vector<Tensor> states;  // horizon + 1
    std::vector<double> log_probs;
    Tensor terminal;
    double reward = 0.0;
    double advantage = 0.0;
};

DiffusionTrajectory ddpo_rollout(const ScoreModel& model, int context, Rng& rng);

std::vector<double> ddpo_replay_log_probs(const ScoreModel& model, const ParamStore& params,
                                          const DiffusionTrajectory& traj);

struct DsmConfig {
    int iterations = 4000;
    int batch_size = 64;
    double lr = 1e-3;
};

/// Denoising score matching: regression of D(x0 + sigma z, sigma, c) onto
/// x0 over the model's noise grid. Returns the per-iteration loss history.
PretrainResult dsm_pretrain(ScoreModel& model, const Dataset& dataset, const DsmConfig& cfg,
                            Rng& rng);

/// Policy-gradient fine-tuning of the diffusion baseline with the identical
/// clipped surrogate, per-context normalization, and metrics schema as the
/// consistency arm.
std::vector<MetricsRow> train_ddpo(ScoreModel& model, const std::vector<int>& contexts,
                                   const QueryCounter& reward, const TrainConfig& cfg,
                                   uint64_t seed,
                                   const std::function<bool(const MetricsRow&)>& stop_when = {});

/// Mean terminal reward of the baseline sampler over fresh trajectories.
EvalResult evaluate_ddpo(const ScoreModel& model, const std::vector<int>& contexts,
                         const RewardFn& reward, int num_traj, uint64_t seed);

}  // namespace cmrl

#endif
