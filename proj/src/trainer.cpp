#include "cmrl/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "cmrl/error.hpp"

namespace cmrl {

void TrainConfig::validate() const {
    require(epochs >= 0, "train config: epochs must be >= 0");
    require(batches_per_epoch >= 1, "train config: batches_per_epoch must be >= 1");
    require(sample_batch_size >= 1, "train config: sample_batch_size must be >= 1");
    require(train_batch_size >= 1, "train config: train_batch_size must be >= 1");
    require(inner_epochs >= 1, "train config: inner_epochs must be >= 1");
    require(lr > 0.0, "train config: lr must be positive");
    require(clip_range > 0.0 && clip_range < 1.0, "train config: clip_range must be in (0,1)");
    require(adv_clip_max > 0.0, "train config: adv_clip_max must be positive");
    require(max_grad_norm > 0.0, "train config: max_grad_norm must be positive");
    require(stats_buffer_size >= 1, "train config: stats_buffer_size must be >= 1");
    require(stats_min_count >= 1, "train config: stats_min_count must be >= 1");
}

int rollout_threads() {
    const char* env = std::getenv("CMRL_THREADS");
    if (env == nullptr) {
        return 1;
    }
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

std::vector<Trajectory> collect_rollouts(const ConsistencyModel& model, const TimeGrid& grid,
                                         const std::vector<int>& contexts, int count,
                                         uint64_t seed, uint64_t traj_index_base,
                                         const QueryCounter& reward, int threads) {
    require(!contexts.empty(), "collect_rollouts: empty context set");
    require(count >= 1, "collect_rollouts: count must be >= 1");
    std::vector<Trajectory> trajs(static_cast<size_t>(count));
    Rng root(seed);

    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            Rng stream = root.derive(traj_index_base + static_cast<uint64_t>(i));
            int c = contexts[static_cast<size_t>(stream.uniform_int(static_cast<int>(contexts.size())))];
            Trajectory traj = rollout(model, grid, c, stream);
            traj.reward = reward(traj.terminal, c);
            require(std::isfinite(traj.reward), "collect_rollouts: non-finite reward");
            trajs[static_cast<size_t>(i)] = std::move(traj);
        }
    };

    int n_threads = std::min(threads, count);
    if (n_threads <= 1 || !reward.pure()) {
        worker(0, count);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        int chunk = (count + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            int begin = t * chunk;
            int end = std::min(count, begin + chunk);
            if (begin < end) {
                pool.emplace_back(worker, begin, end);
            }
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return trajs;
}

UpdateStats rlcm_update(ConsistencyModel& model, const ParamStore& frozen_rollout_params,
                        const TimeGrid& grid, const std::vector<const Trajectory*>& minibatch,
                        const TrainConfig& cfg, AdamState& adam) {
    require(!minibatch.empty(), "rlcm_update: empty minibatch");
    Tape tape;
    ValueId total = tape.input(Tensor::scalar(0.0));
    int clip_hits = 0;
    int step_count = 0;
    for (const Trajectory* traj : minibatch) {
        std::vector<double> logp_old = replay_log_probs(model, frozen_rollout_params, grid, *traj);
        std::vector<ValueId> logp_new;
        logp_new.reserve(logp_old.size());
        for (int t = 0; t + 1 < grid.horizon; ++t) {
            ValueId mean = model.apply_taped(tape, traj->states[static_cast<size_t>(t)],
                                             grid.tau(t), traj->context);
            logp_new.push_back(gaussian_logprob_taped(tape, mean, policy_std(grid, t),
                                                      traj->actions[static_cast<size_t>(t)]));
        }
        for (size_t t = 0; t < logp_new.size(); ++t) {
            double ratio = std::exp(tape.value(logp_new[t])[0] - logp_old[t]);
            if (clip_active(ratio, traj->advantage, cfg.clip_range)) {
                ++clip_hits;
            }
            ++step_count;
        }
        total = tape.add(total, clipped_surrogate_taped(tape, logp_new, logp_old, traj->advantage,
                                                        cfg.clip_range));
    }
    ValueId objective = tape.scale(total, 1.0 / static_cast<double>(minibatch.size()));
    double objective_value = tape.value(objective)[0];
    if (!std::isfinite(objective_value)) {
        throw NumericError("rlcm_update: non-finite surrogate objective");
    }
    // maximize the surrogate
    ValueId loss = tape.scale(objective, -1.0);
    backward(tape, loss);

    UpdateStats stats;
    stats.surrogate = objective_value;
    stats.grad_norm = model.params.grad_norm();
    stats.clip_fraction = step_count > 0 ? static_cast<double>(clip_hits) / step_count : 0.0;
    clip_grad_norm(model.params, cfg.max_grad_norm);
    adam_step(model.params, adam, cfg.lr);
    return stats;
}

static std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::vector<MetricsRow> train_rlcm(ConsistencyModel& model, const TimeGrid& grid,
                                   const std::vector<int>& contexts, const QueryCounter& reward,
                                   const TrainConfig& cfg, uint64_t seed, const TrainHooks& hooks) {
    cfg.validate();
    std::vector<MetricsRow> history;
    if (cfg.epochs == 0) {
        return history;
    }
    ContextStats stats(cfg.stats_buffer_size, cfg.stats_min_count, model.vocab);
    AdamState adam(model.params);
    Rng root(seed);
    int threads = rollout_threads();
    uint64_t traj_base = 0;
    double t0 = cpu_seconds();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ParamStore frozen = model.params.clone();
        std::vector<Trajectory> trajs = collect_rollouts(
            model, grid, contexts, cfg.rollouts_per_epoch(), seed, traj_base, reward, threads);
        traj_base += static_cast<uint64_t>(trajs.size());

        double rmean = 0.0;
        for (Trajectory& traj : trajs) {
            traj.advantage = stats.normalize(traj.context, traj.reward, cfg.adv_clip_max);
            rmean += traj.reward;
        }
        rmean /= static_cast<double>(trajs.size());
        double rvar = 0.0;
        for (const Trajectory& traj : trajs) {
            rvar += (traj.reward - rmean) * (traj.reward - rmean);
        }
        rvar /= static_cast<double>(trajs.size());

        double sum_surrogate = 0.0;
        double sum_grad_norm = 0.0;
        double sum_clip = 0.0;
        int updates = 0;
        Rng shuffle_rng = root.derive(0x5u * 0x100000000ULL + static_cast<uint64_t>(epoch));
        for (int inner = 0; inner < cfg.inner_epochs; ++inner) {
            std::vector<size_t> order = shuffled_indices(trajs.size(), shuffle_rng);
            for (size_t start = 0; start < order.size();
                 start += static_cast<size_t>(cfg.train_batch_size)) {
                std::vector<const Trajectory*> minibatch;
                for (size_t k = start;
                     k < std::min(order.size(), start + static_cast<size_t>(cfg.train_batch_size));
                     ++k) {
                    minibatch.push_back(&trajs[order[k]]);
                }
                UpdateStats us = rlcm_update(model, frozen, grid, minibatch, cfg, adam);
                sum_surrogate += us.surrogate;
                sum_grad_norm += us.grad_norm;
                sum_clip += us.clip_fraction;
                ++updates;
            }
        }

        MetricsRow row;
        row.epoch = epoch;
        row.reward_queries = reward.count();
        row.cpu_seconds = cpu_seconds() - t0;
        row.reward_mean = rmean;
        row.reward_std = std::sqrt(rvar);
        row.surrogate_loss = updates > 0 ? -sum_surrogate / updates : 0.0;
        row.grad_norm = updates > 0 ? sum_grad_norm / updates : 0.0;
        row.clip_fraction = updates > 0 ? sum_clip / updates : 0.0;
        row.seed = seed;
        if (!std::isfinite(row.reward_mean) || !std::isfinite(row.surrogate_loss) ||
            !std::isfinite(row.grad_norm)) {
            throw NumericError("train: non-finite metrics at epoch " + std::to_string(epoch) +
                               " (reward_mean=" + std::to_string(row.reward_mean) +
                               ", surrogate_loss=" + std::to_string(row.surrogate_loss) + ")");
        }
        history.push_back(row);
        if (hooks.on_epoch) {
            hooks.on_epoch(model, row);
        }
        if (hooks.stop_when && hooks.stop_when(row)) {
            break;
        }
    }
    return history;
}

EvalResult evaluate_policy(const ConsistencyModel& model, const TimeGrid& grid,
                           const std::vector<int>& contexts, const RewardFn& reward, int num_traj,
                           uint64_t seed) {
    require(num_traj >= 1, "evaluate_policy: num_traj must be >= 1");
    require(!contexts.empty(), "evaluate_policy: empty context set");
    EvalResult result;
    result.rewards.reserve(static_cast<size_t>(num_traj));
    result.traj_cpu_seconds.reserve(static_cast<size_t>(num_traj));
    Rng root(seed);
    for (int i = 0; i < num_traj; ++i) {
        Rng stream = root.derive(static_cast<uint64_t>(i));
        int c = contexts[static_cast<size_t>(stream.uniform_int(static_cast<int>(contexts.size())))];
        double t0 = cpu_seconds();
        Tensor sample = multistep_sample(model, grid, c, stream);
        result.traj_cpu_seconds.push_back(cpu_seconds() - t0);
        result.rewards.push_back(reward(sample, c));
    }
    double s = 0.0;
    for (double r : result.rewards) {
        s += r;
    }
    result.mean_reward = s / static_cast<double>(num_traj);
    double v = 0.0;
    for (double r : result.rewards) {
        v += (r - result.mean_reward) * (r - result.mean_reward);
    }
    result.std_reward = std::sqrt(v / static_cast<double>(num_traj));
    double ts = 0.0;
    for (double t : result.traj_cpu_seconds) {
        ts += t;
    }
    result.mean_traj_cpu_seconds = ts / static_cast<double>(num_traj);
    return result;
}

}  // namespace cmrl
