#ifndef CMRL_TRAINER_HPP
#define CMRL_TRAINER_HPP

#include <functional>
#include <vector>

#include "cmrl/consistency.hpp"
#include "cmrl/metrics.hpp"
#include "cmrl/normalize.hpp"
#include "cmrl/rewards.hpp"
#include "cmrl/rollout.hpp"
#include "cmrl/surrogate.hpp"
#include "cmrl/time_grid.hpp"

namespace cmrl {

/// Fine-tuning hyperparameters (shared by both arms). The defaults are the
/// compression-task configuration.
struct TrainConfig {
    int epochs = 100;
    int batches_per_epoch = 10;
    int sample_batch_size = 4;
    int train_batch_size = 2;
    int inner_epochs = 1;
    double lr = 1e-4;
    double clip_range = 1e-4;
    double adv_clip_max = 10.0;
    double max_grad_norm = 5.0;
    int stats_buffer_size = 16;
    int stats_min_count = 16;

    int rollouts_per_epoch() const { return batches_per_epoch * sample_batch_size; }
    void validate() const;
};

struct UpdateStats {
    double surrogate = 0.0;   // mean clipped objective over the minibatch
    double grad_norm = 0.0;   // pre-clip global gradient norm
    double clip_fraction = 0.0;
};

struct TrainHooks {
    /// Called after each epoch (checkpointing, logging).
    std::function<void(const ConsistencyModel&, const MetricsRow&)> on_epoch;
    /// Optional early-stop predicate evaluated on each epoch's row.
    std::function<bool(const MetricsRow&)> stop_when;
};

/// Thread count for rollout collection; reads the CMRL_THREADS environment
/// override, default 1. Results are identical for any value by
/// construction (per-trajectory RNG streams).
int rollout_threads();

/// Collects `count` rollouts with RNG streams keyed by
/// (seed, traj_index_base + i) and scores terminal samples through the
/// counter. Deterministic for any thread count.
std::vector<Trajectory> collect_rollouts(const ConsistencyModel& model, const TimeGrid& grid,
                                         const std::vector<int>& contexts, int count,
                                         uint64_t seed, uint64_t traj_index_base,
                                         const QueryCounter& reward, int threads = 1);

/// One minibatch policy update: re-evaluates log pi under the current
/// parameters on the stored states, forms the clipped surrogate against the
/// rollout-time (frozen) policy's log-probs, and takes a gradient-clipped
/// Adam step on the negated objective.
UpdateStats rlcm_update(ConsistencyModel& model, const ParamStore& frozen_rollout_params,
                        const TimeGrid& grid, const std::vector<const Trajectory*>& minibatch,
                        const TrainConfig& cfg, AdamState& adam);

/// The full fine-tuning loop: per epoch, freeze the rollout policy, collect
/// batches_per_epoch x sample_batch_size trajectories, score and normalize
/// rewards per context, then run inner-epoch minibatch updates over the
/// pooled data. Returns one metrics row per completed epoch.
std::vector<MetricsRow> train_rlcm(ConsistencyModel& model, const TimeGrid& grid,
                                   const std::vector<int>& contexts, const QueryCounter& reward,
                                   const TrainConfig& cfg, uint64_t seed,
                                   const TrainHooks& hooks = {});

struct EvalResult {
    double mean_reward = 0.0;
    double std_reward = 0.0;
    std::vector<double> rewards;
    std::vector<double> traj_cpu_seconds;
    double mean_traj_cpu_seconds = 0.0;
};

/// Mean terminal reward over fresh trajectories (no training state is
/// touched; reward calls are not counted).
EvalResult evaluate_policy(const ConsistencyModel& model, const TimeGrid& grid,
                           const std::vector<int>& contexts, const RewardFn& reward, int num_traj,
                           uint64_t seed);

}  // namespace cmrl

#endif
