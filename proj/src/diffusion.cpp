#include "cmrl/diffusion.hpp"

#include <cmath>
#include <numeric>

#include "cmrl/error.hpp"
#include "cmrl/surrogate.hpp"

namespace cmrl {

static void copy_score_fields(ScoreModel& dst, const ScoreModel& src) {
    dst.sigma_grid = src.sigma_grid;
    dst.sigma_data = src.sigma_data;
    dst.vocab = src.vocab;
    dst.data_dim = src.data_dim;
    dst.hidden = src.hidden;
    dst.time_feature_dim = src.time_feature_dim;
    dst.context_embed_dim = src.context_embed_dim;
}

ScoreModel::ScoreModel(const ScoreModel& other) : params(other.params) {
    copy_score_fields(*this, other);
    forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
}

ScoreModel& ScoreModel::operator=(const ScoreModel& other) {
    if (this != &other) {
        params = other.params;
        copy_score_fields(*this, other);
        forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
    }
    return *this;
}

ScoreModel::ScoreModel(ScoreModel&& other) noexcept : params(std::move(other.params)) {
    copy_score_fields(*this, other);
    forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
}

ScoreModel& ScoreModel::operator=(ScoreModel&& other) noexcept {
    if (this != &other) {
        params = std::move(other.params);
        copy_score_fields(*this, other);
        forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
    }
    return *this;
}

ScoreModel ScoreModel::create(int64_t data_dim, int vocab, const std::vector<int64_t>& hidden,
                              int horizon, Rng& rng, double T, double eps, double sigma_data,
                              int time_feature_dim, int context_embed_dim) {
    require(horizon >= 1, "score model: horizon must be >= 1");
    require(0.0 < eps && eps < T, "score model: need 0 < eps < T");
    ScoreModel m;
    m.sigma_data = sigma_data;
    m.vocab = vocab;
    m.data_dim = data_dim;
    m.hidden = hidden;
    m.time_feature_dim = time_feature_dim;
    m.context_embed_dim = context_embed_dim;
    // geometric noise grid from T down to eps
    m.sigma_grid.resize(static_cast<size_t>(horizon) + 1);
    for (int i = 0; i <= horizon; ++i) {
        double frac = static_cast<double>(i) / static_cast<double>(horizon);
        m.sigma_grid[static_cast<size_t>(i)] = T * std::pow(eps / T, frac);
    }
    m.sigma_grid.front() = T;
    m.sigma_grid.back() = eps;
    for (int i = 0; i < horizon; ++i) {
        require(m.sigma_grid[static_cast<size_t>(i)] > m.sigma_grid[static_cast<size_t>(i) + 1],
                "score model: noise grid must be strictly decreasing");
    }
    mlp_init(m.params, m.mlp_spec(), rng);
    double bound = 1.0 / std::sqrt(static_cast<double>(context_embed_dim));
    Tensor emb = Tensor::zeros({vocab, context_embed_dim});
    for (double& v : emb.data) {
        v = rng.uniform01() * 2.0 * bound - bound;
    }
    m.params.add("context_embedding", std::move(emb));
    return m;
}

MlpSpec ScoreModel::mlp_spec() const {
    MlpSpec spec;
    spec.in_dim = data_dim + time_feature_dim + context_embed_dim;
    spec.hidden = hidden;
    spec.out_dim = data_dim;
    return spec;
}

// EDM-style preconditioning; no boundary constraint for a denoiser.
static double d_c_skip(double sigma, double sd) {
    return sd * sd / (sigma * sigma + sd * sd);
}
static double d_c_out(double sigma, double sd) {
    return sigma * sd / std::sqrt(sigma * sigma + sd * sd);
}
static double d_c_in(double sigma, double sd) {
    return 1.0 / std::sqrt(sigma * sigma + sd * sd);
}

Tensor ScoreModel::denoise_with(const ParamStore& alt, const Tensor& x, double sigma,
                                int context) const {
    require(sigma > 0.0, "denoise: sigma must be positive");
    require(context >= 0 && context < vocab, "denoise: context out of vocabulary");
    require(x.numel() == data_dim, "denoise: wrong data dimension");
    forward_calls_.fetch_add(1, std::memory_order_relaxed);
    Tensor xin = scale(x, d_c_in(sigma, sigma_data));
    Tensor tf = time_features(sigma, time_feature_dim);
    const Tensor& emb = alt.value("context_embedding");
    Tensor ce = Tensor::zeros({emb.cols()});
    for (int64_t j = 0; j < emb.cols(); ++j) {
        ce[j] = emb.at2(context, j);
    }
    Tensor F = mlp_forward(alt, mlp_spec(), xin, tf, ce);
    Tensor out = scale(x, d_c_skip(sigma, sigma_data));
    axpy(out, d_c_out(sigma, sigma_data), F);
    return out;
}

Tensor ScoreModel::denoise(const Tensor& x, double sigma, int context) const {
    return denoise_with(params, x, sigma, context);
}

ValueId ScoreModel::denoise_taped(Tape& tape, const Tensor& x, double sigma, int context) {
    require(sigma > 0.0, "denoise: sigma must be positive");
    require(context >= 0 && context < vocab, "denoise: context out of vocabulary");
    require(x.numel() == data_dim, "denoise: wrong data dimension");
    forward_calls_.fetch_add(1, std::memory_order_relaxed);
    ValueId x_leaf = tape.input(x);
    ValueId xin = tape.scale(x_leaf, d_c_in(sigma, sigma_data));
    ValueId tf = tape.input(time_features(sigma, time_feature_dim));
    ValueId ce = tape.row(tape.param(params, "context_embedding"), context);
    ValueId F = mlp_forward_taped(tape, params, mlp_spec(), {xin, tf, ce});
    return tape.add(tape.scale(x_leaf, d_c_skip(sigma, sigma_data)),
                    tape.scale(F, d_c_out(sigma, sigma_data)));
}

static double transition_std(double s_hi, double s_lo) {
    return std::sqrt(s_lo * s_lo * (s_hi * s_hi - s_lo * s_lo) / (s_hi * s_hi));
}

AncestralStep ancestral_transition(const Tensor& x, const Tensor& denoised, double s_hi,
                                   double s_lo, const Tensor& z) {
    require(s_lo > 0.0 && s_lo < s_hi, "ancestral_transition: need 0 < s_lo < s_hi");
    AncestralStep step;
    // score = (denoised - x) / s_hi^2; mean = x + (s_hi^2 - s_lo^2) * score
    double k = (s_hi * s_hi - s_lo * s_lo) / (s_hi * s_hi);
    step.mean = scale(x, 1.0 - k);
    axpy(step.mean, k, denoised);
    step.stddev = transition_std(s_hi, s_lo);
    step.next = step.mean;
    axpy(step.next, step.stddev, z);
    return step;
}

AncestralStep ancestral_step(const ScoreModel& model, const Tensor& x, int level, int context,
                             const Tensor& z) {
    require(level >= 0 && level < model.horizon(), "ancestral_step: level out of range");
    double s_hi = model.sigma_grid[static_cast<size_t>(level)];
    double s_lo = model.sigma_grid[static_cast<size_t>(level) + 1];
    return ancestral_transition(x, model.denoise(x, s_hi, context), s_hi, s_lo, z);
}

DiffusionTrajectory ddpo_rollout(const ScoreModel& model, int context, Rng& rng) {
    DiffusionTrajectory traj;
    traj.context = context;
    int H = model.horizon();
    traj.states.reserve(static_cast<size_t>(H) + 1);
    traj.log_probs.reserve(static_cast<size_t>(H));
    traj.states.push_back(scale(rng.normal_vec(model.data_dim), model.sigma_grid.front()));
    for (int i = 0; i < H; ++i) {
        Tensor z = rng.normal_vec(model.data_dim);
        AncestralStep step = ancestral_step(model, traj.states.back(), i, context, z);
        traj.log_probs.push_back(gaussian_logprob(step.mean, step.stddev, step.next));
        traj.states.push_back(std::move(step.next));
    }
    traj.terminal = traj.states.back();
    traj.terminal.check_finite("ddpo rollout terminal");
    return traj;
}

std::vector<double> ddpo_replay_log_probs(const ScoreModel& model, const ParamStore& params,
                                          const DiffusionTrajectory& traj) {
    int H = model.horizon();
    std::vector<double> out;
    out.reserve(static_cast<size_t>(H));
    for (int i = 0; i < H; ++i) {
        double s_hi = model.sigma_grid[static_cast<size_t>(i)];
        double s_lo = model.sigma_grid[static_cast<size_t>(i) + 1];
        Tensor d = model.denoise_with(params, traj.states[static_cast<size_t>(i)], s_hi,
                                      traj.context);
        double k = (s_hi * s_hi - s_lo * s_lo) / (s_hi * s_hi);
        Tensor mean = scale(traj.states[static_cast<size_t>(i)], 1.0 - k);
        axpy(mean, k, d);
        out.push_back(gaussian_logprob(mean, transition_std(s_hi, s_lo),
                                       traj.states[static_cast<size_t>(i) + 1]));
    }
    return out;
}

PretrainResult dsm_pretrain(ScoreModel& model, const Dataset& dataset, const DsmConfig& cfg,
                            Rng& rng) {
    require(model.data_dim == dataset.dim() && model.vocab == dataset.vocab(),
            "dsm_pretrain: model/dataset mismatch");
    PretrainResult result;
    if (cfg.iterations <= 0) {
        return result;
    }
    AdamState adam(model.params);
    result.loss_history.reserve(static_cast<size_t>(cfg.iterations));
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        Tape tape;
        ValueId loss_sum = tape.input(Tensor::scalar(0.0));
        for (int b = 0; b < cfg.batch_size; ++b) {
            uint64_t sample_index =
                static_cast<uint64_t>(iter) * static_cast<uint64_t>(cfg.batch_size) +
                static_cast<uint64_t>(b);
            Rng rs = rng.derive(sample_index);
            int c = rs.uniform_int(dataset.vocab());
            Tensor x0 = dataset.sample(rs, c);
            Tensor z = rs.normal_vec(model.data_dim);
            int level = rs.uniform_int(model.horizon());
            double sigma = model.sigma_grid[static_cast<size_t>(level)];
            Tensor noisy = x0;
            axpy(noisy, sigma, z);
            ValueId d = model.denoise_taped(tape, noisy, sigma, c);
            ValueId diff = tape.sub(d, tape.input(x0));
            loss_sum = tape.add(loss_sum, tape.sum_(tape.mul(diff, diff)));
        }
        ValueId loss = tape.scale(loss_sum, 1.0 / static_cast<double>(cfg.batch_size));
        double loss_value = tape.value(loss)[0];
        if (!std::isfinite(loss_value)) {
            throw NumericError("dsm_pretrain: non-finite loss at iteration " + std::to_string(iter));
        }
        backward(tape, loss);
        adam_step(model.params, adam, cfg.lr);
        result.loss_history.push_back(loss_value);
    }
    return result;
}

static UpdateStats ddpo_update(ScoreModel& model, const ParamStore& frozen,
                               const std::vector<const DiffusionTrajectory*>& minibatch,
                               const TrainConfig& cfg, AdamState& adam) {
    require(!minibatch.empty(), "ddpo_update: empty minibatch");
    Tape tape;
    ValueId total = tape.input(Tensor::scalar(0.0));
    int clip_hits = 0;
    int step_count = 0;
    for (const DiffusionTrajectory* traj : minibatch) {
        std::vector<double> logp_old = ddpo_replay_log_probs(model, frozen, *traj);
        std::vector<ValueId> logp_new;
        logp_new.reserve(logp_old.size());
        for (int i = 0; i < model.horizon(); ++i) {
            double s_hi = model.sigma_grid[static_cast<size_t>(i)];
            double s_lo = model.sigma_grid[static_cast<size_t>(i) + 1];
            double k = (s_hi * s_hi - s_lo * s_lo) / (s_hi * s_hi);
            ValueId d = model.denoise_taped(tape, traj->states[static_cast<size_t>(i)], s_hi,
                                            traj->context);
            ValueId x_leaf = tape.input(traj->states[static_cast<size_t>(i)]);
            ValueId mean = tape.add(tape.scale(x_leaf, 1.0 - k), tape.scale(d, k));
            logp_new.push_back(gaussian_logprob_taped(tape, mean, transition_std(s_hi, s_lo),
                                                      traj->states[static_cast<size_t>(i) + 1]));
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
        throw NumericError("ddpo_update: non-finite surrogate objective");
    }
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

std::vector<MetricsRow> train_ddpo(ScoreModel& model, const std::vector<int>& contexts,
                                   const QueryCounter& reward, const TrainConfig& cfg,
                                   uint64_t seed,
                                   const std::function<bool(const MetricsRow&)>& stop_when) {
    cfg.validate();
    require(!contexts.empty(), "train_ddpo: empty context set");
    std::vector<MetricsRow> history;
    if (cfg.epochs == 0) {
        return history;
    }
    ContextStats stats(cfg.stats_buffer_size, cfg.stats_min_count, model.vocab);
    AdamState adam(model.params);
    Rng root(seed);
    uint64_t traj_base = 0;
    double t0 = cpu_seconds();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ParamStore frozen = model.params.clone();
        int count = cfg.rollouts_per_epoch();
        std::vector<DiffusionTrajectory> trajs(static_cast<size_t>(count));
        for (int i = 0; i < count; ++i) {
            Rng stream = root.derive(traj_base + static_cast<uint64_t>(i));
            int c = contexts[static_cast<size_t>(
                stream.uniform_int(static_cast<int>(contexts.size())))];
            trajs[static_cast<size_t>(i)] = ddpo_rollout(model, c, stream);
            trajs[static_cast<size_t>(i)].reward = reward(trajs[static_cast<size_t>(i)].terminal, c);
        }
        traj_base += static_cast<uint64_t>(count);

        double rmean = 0.0;
        for (DiffusionTrajectory& traj : trajs) {
            traj.advantage = stats.normalize(traj.context, traj.reward, cfg.adv_clip_max);
            rmean += traj.reward;
        }
        rmean /= static_cast<double>(trajs.size());
        double rvar = 0.0;
        for (const DiffusionTrajectory& traj : trajs) {
            rvar += (traj.reward - rmean) * (traj.reward - rmean);
        }
        rvar /= static_cast<double>(trajs.size());

        double sum_surrogate = 0.0;
        double sum_grad_norm = 0.0;
        double sum_clip = 0.0;
        int updates = 0;
        Rng shuffle_rng = root.derive(0x5u * 0x100000000ULL + static_cast<uint64_t>(epoch));
        for (int inner = 0; inner < cfg.inner_epochs; ++inner) {
            std::vector<size_t> order(trajs.size());
            std::iota(order.begin(), order.end(), size_t{0});
            for (size_t i = order.size(); i > 1; --i) {
                size_t j = static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int>(i)));
                std::swap(order[i - 1], order[j]);
            }
            for (size_t start = 0; start < order.size();
                 start += static_cast<size_t>(cfg.train_batch_size)) {
                std::vector<const DiffusionTrajectory*> minibatch;
                for (size_t k = start;
                     k < std::min(order.size(), start + static_cast<size_t>(cfg.train_batch_size));
                     ++k) {
                    minibatch.push_back(&trajs[order[k]]);
                }
                UpdateStats us = ddpo_update(model, frozen, minibatch, cfg, adam);
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
        if (!std::isfinite(row.reward_mean) || !std::isfinite(row.surrogate_loss)) {
            throw NumericError("train_ddpo: non-finite metrics at epoch " + std::to_string(epoch));
        }
        history.push_back(row);
        if (stop_when && stop_when(row)) {
            break;
        }
    }
    return history;
}

EvalResult evaluate_ddpo(const ScoreModel& model, const std::vector<int>& contexts,
                         const RewardFn& reward, int num_traj, uint64_t seed) {
    require(num_traj >= 1, "evaluate_ddpo: num_traj must be >= 1");
    EvalResult result;
    result.rewards.reserve(static_cast<size_t>(num_traj));
    Rng root(seed);
    for (int i = 0; i < num_traj; ++i) {
        Rng stream = root.derive(static_cast<uint64_t>(i));
        int c = contexts[static_cast<size_t>(stream.uniform_int(static_cast<int>(contexts.size())))];
        double t0 = cpu_seconds();
        DiffusionTrajectory traj = ddpo_rollout(model, c, stream);
        result.traj_cpu_seconds.push_back(cpu_seconds() - t0);
        result.rewards.push_back(reward(traj.terminal, c));
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
