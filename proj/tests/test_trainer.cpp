#include <cmath>

#include "cmrl/error.hpp"
#include "cmrl/trainer.hpp"
#include "doctest.h"

using namespace cmrl;

namespace {

ConsistencyModel tiny_model(uint64_t seed) {
    Rng rng(seed);
    return ConsistencyModel::create(2, 4, {12}, rng);
}

RewardFn unit_reward() {
    return RewardFn{"unit", true, [](const Tensor&, int) { return 1.0; }};
}

}  // namespace

TEST_CASE("normalize_reward: hand-computed population statistics") {
    ContextStats stats(8, 1, 1);  // min count 1 waives centering-only mode
    stats.normalize(0, 1.0, 10.0);
    stats.normalize(0, 2.0, 10.0);
    stats.normalize(0, 3.0, 10.0);
    stats.normalize(0, 4.0, 10.0);
    // buffer [1,2,3,4]: mean 2.5, population std sqrt(1.25)
    CHECK(stats.mean(0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(stats.stddev(0) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    double adv = stats.normalize(0, 6.0, 10.0);
    CHECK(adv == doctest::Approx(3.1304951684997055).epsilon(1e-12));
}

TEST_CASE("normalize_reward: equal buffer and equal reward give zero") {
    ContextStats stats(8, 1, 2);
    stats.normalize(1, 5.0, 10.0);
    stats.normalize(1, 5.0, 10.0);
    stats.normalize(1, 5.0, 10.0);
    CHECK(stats.normalize(1, 5.0, 10.0) == 0.0);
}

TEST_CASE("normalize_reward: extreme reward with tiny std clips to +/- 10") {
    ContextStats stats(8, 1, 2);  // one buffer per probe; the probe itself widens the buffer
    stats.normalize(0, 1.0, 10.0);
    stats.normalize(0, 1.0 + 1e-9, 10.0);
    CHECK(stats.normalize(0, 1e6, 10.0) == 10.0);
    stats.normalize(1, 1.0, 10.0);
    stats.normalize(1, 1.0 + 1e-9, 10.0);
    CHECK(stats.normalize(1, -1e6, 10.0) == -10.0);
}

TEST_CASE("normalize_reward: first reward of a context has no history, advantage 0") {
    ContextStats stats(16, 16, 3);
    CHECK(stats.normalize(2, 123.4, 10.0) == 0.0);
    CHECK(stats.count(2) == 1);
}

TEST_CASE("normalize_reward: below min count only centers (std treated as 1)") {
    ContextStats stats(16, 16, 1);
    stats.normalize(0, 10.0, 10.0);
    double adv = stats.normalize(0, 12.0, 10.0);  // buffer [10]: 12 - 10 = 2
    CHECK(adv == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("normalize_reward: FIFO eviction beyond capacity") {
    ContextStats stats(2, 1, 1);
    stats.normalize(0, 1.0, 10.0);
    stats.normalize(0, 2.0, 10.0);
    stats.normalize(0, 3.0, 10.0);
    // buffer now [2, 3]
    CHECK(stats.count(0) == 2);
    CHECK(stats.mean(0) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("normalize_reward: positive affine reward transforms leave advantages unchanged") {
    Rng rng(808);
    for (int rep = 0; rep < 20; ++rep) {
        double a = 0.1 + rng.uniform01() * 5.0;
        double b = rng.normal() * 3.0;
        ContextStats raw(16, 2, 1);
        ContextStats affine(16, 2, 1);
        // seed both buffers past min count with >= 2 distinct values
        std::vector<double> history{0.3, 1.7, -0.4, 0.9};
        for (double r : history) {
            raw.normalize(0, r, 1e9);
            affine.normalize(0, a * r + b, 1e9);
        }
        for (int k = 0; k < 5; ++k) {
            double r = rng.normal();
            double adv_raw = raw.normalize(0, r, 1e9);
            double adv_affine = affine.normalize(0, a * r + b, 1e9);
            CHECK(adv_raw == doctest::Approx(adv_affine).epsilon(1e-9));
        }
    }
}

TEST_CASE("normalize_reward: advantages always bounded by the clip maximum") {
    Rng rng(3131);
    ContextStats stats(16, 16, 4);
    for (int i = 0; i < 500; ++i) {
        int c = rng.uniform_int(4);
        double r = rng.normal() * std::pow(10.0, rng.uniform_int(6));
        double adv = stats.normalize(c, r, 10.0);
        CHECK(std::abs(adv) <= 10.0);
    }
}

TEST_CASE("clipped_surrogate: ratio 1 returns the advantage per step") {
    std::vector<double> lp{-1.3};
    CHECK(clipped_surrogate(lp, lp, 2.0, 1e-4) == doctest::Approx(2.0).epsilon(1e-15));
    std::vector<double> lp5(5, -0.2);
    CHECK(clipped_surrogate(lp5, lp5, 3.0, 1e-4) == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("clipped_surrogate: clip branch engages for ratio 1.5, A=2") {
    std::vector<double> logp_old{0.0};
    std::vector<double> logp_new{std::log(1.5)};
    double got = clipped_surrogate(logp_new, logp_old, 2.0, 1e-4);
    CHECK(got == doctest::Approx(2.0 * 1.0001).epsilon(1e-12));
    CHECK(clip_active(1.5, 2.0, 1e-4));
}

TEST_CASE("clipped_surrogate: negative advantage keeps the pessimistic branch") {
    std::vector<double> logp_old{0.0};
    std::vector<double> logp_new{std::log(0.5)};
    double got = clipped_surrogate(logp_new, logp_old, -1.0, 1e-4);
    CHECK(got == doctest::Approx(-0.9999).epsilon(1e-12));
    CHECK(clip_active(0.5, -1.0, 1e-4));
    CHECK(!clip_active(1.0, -1.0, 1e-4));
}

TEST_CASE("clipped_surrogate: monotone in A >= 0 and bounded by A(1+eps)steps") {
    Rng rng(99);
    for (int rep = 0; rep < 50; ++rep) {
        int steps = 1 + rng.uniform_int(6);
        std::vector<double> logp_old, logp_new;
        for (int t = 0; t < steps; ++t) {
            logp_old.push_back(rng.normal());
            logp_new.push_back(logp_old.back() + 0.3 * rng.normal());
        }
        double eps_clip = 0.05 + rng.uniform01() * 0.3;
        double a1 = rng.uniform01() * 3.0;
        double a2 = a1 + rng.uniform01() * 3.0;
        double s1 = clipped_surrogate(logp_new, logp_old, a1, eps_clip);
        double s2 = clipped_surrogate(logp_new, logp_old, a2, eps_clip);
        CHECK(s1 <= s2 + 1e-12);
        CHECK(s2 <= a2 * (1.0 + eps_clip) * steps + 1e-12);
    }
}

TEST_CASE("clipped_surrogate: taped value agrees with the plain evaluation") {
    Rng rng(123);
    for (int rep = 0; rep < 20; ++rep) {
        int steps = 1 + rng.uniform_int(4);
        std::vector<double> logp_old, logp_plain;
        Tape tape;
        std::vector<ValueId> logp_ids;
        for (int t = 0; t < steps; ++t) {
            double lo = rng.normal();
            double ln = lo + 0.4 * rng.normal();
            logp_old.push_back(lo);
            logp_plain.push_back(ln);
            logp_ids.push_back(tape.input(Tensor::scalar(ln)));
        }
        double adv = rng.normal() * 2.0;
        double eps_clip = 0.1;
        ValueId obj = clipped_surrogate_taped(tape, logp_ids, logp_old, adv, eps_clip);
        CHECK(tape.value(obj)[0] ==
              doctest::Approx(clipped_surrogate(logp_plain, logp_old, adv, eps_clip))
                  .epsilon(1e-12));
    }
}

TEST_CASE("rlcm_update: first pass after rollout has all ratios 1, clip fraction 0") {
    ConsistencyModel model = tiny_model(17);
    TimeGrid grid = karras_grid(4, model.eps, model.T);
    Rng rng(5);
    Trajectory traj = rollout(model, grid, 1, rng);
    traj.advantage = 1.5;
    ParamStore frozen = model.params.clone();

    // the taped log-density reproduces the rollout-time value bit for bit
    for (int t = 0; t + 1 < grid.horizon; ++t) {
        Tape tape;
        ValueId mean = model.apply_taped(tape, traj.states[static_cast<size_t>(t)], grid.tau(t),
                                         traj.context);
        ValueId lp = gaussian_logprob_taped(tape, mean, policy_std(grid, t),
                                            traj.actions[static_cast<size_t>(t)]);
        CHECK(tape.value(lp)[0] == traj.log_probs[static_cast<size_t>(t)]);
    }

    AdamState adam(model.params);
    TrainConfig cfg;
    UpdateStats us = rlcm_update(model, frozen, grid, {&traj}, cfg, adam);
    // surrogate = steps * advantage exactly when every ratio is 1
    CHECK(us.surrogate == 3 * 1.5);
    CHECK(us.clip_fraction == 0.0);
}

TEST_CASE("rlcm_update: zero advantages leave parameters unchanged") {
    ConsistencyModel model = tiny_model(18);
    TimeGrid grid = karras_grid(4, model.eps, model.T);
    Rng rng(6);
    Trajectory traj = rollout(model, grid, 0, rng);
    traj.advantage = 0.0;
    ParamStore before = model.params.clone();
    ParamStore frozen = model.params.clone();
    AdamState adam(model.params);
    TrainConfig cfg;
    UpdateStats us = rlcm_update(model, frozen, grid, {&traj}, cfg, adam);
    CHECK(us.surrogate == 0.0);
    CHECK(us.grad_norm == 0.0);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(model.params.entry(i).value.data == before.entry(i).value.data);
    }
}

TEST_CASE("surrogate gradient matches finite differences (single step, ratio 1)") {
    // REINFORCE identity at ratio 1: grad = A * grad log pi(a|s)
    ConsistencyModel model = tiny_model(19);
    TimeGrid grid = karras_grid(2, model.eps, model.T);
    Rng rng(7);
    Trajectory traj = rollout(model, grid, 2, rng);
    REQUIRE(traj.log_probs.size() == 1);
    double advantage = 0.8;
    double eps_clip = 0.2;  // wide enough that FD probes stay on the smooth branch
    std::vector<double> logp_old = traj.log_probs;

    auto loss_fn = [&] {
        std::vector<double> lp = replay_log_probs(model, model.params, grid, traj);
        return clipped_surrogate(lp, logp_old, advantage, eps_clip);
    };
    Tape tape;
    ValueId mean = model.apply_taped(tape, traj.states[0], grid.tau(0), traj.context);
    ValueId lp = gaussian_logprob_taped(tape, mean, policy_std(grid, 0), traj.actions[0]);
    ValueId obj = clipped_surrogate_taped(tape, {lp}, logp_old, advantage, eps_clip);
    backward(tape, obj);

    const double step = 1e-6;
    for (size_t i = 0; i < model.params.size(); ++i) {
        auto& entry = model.params.entry(i);
        for (size_t j = 0; j < entry.value.data.size(); j += 7) {  // sparse probe
            double saved = entry.value.data[j];
            entry.value.data[j] = saved + step;
            double up = loss_fn();
            entry.value.data[j] = saved - step;
            double down = loss_fn();
            entry.value.data[j] = saved;
            double fd = (up - down) / (2.0 * step);
            double got = entry.grad.data[j];
            CHECK(std::abs(fd - got) / std::max(1.0, std::abs(got)) <= 1e-4);
        }
    }
}

TEST_CASE("train: zero epochs returns no metrics and an untouched model") {
    ConsistencyModel model = tiny_model(20);
    ParamStore before = model.params.clone();
    TimeGrid grid = karras_grid(4, model.eps, model.T);
    QueryCounter reward(unit_reward());
    TrainConfig cfg;
    cfg.epochs = 0;
    auto history = train_rlcm(model, grid, {0, 1, 2, 3}, reward, cfg, 1);
    CHECK(history.empty());
    CHECK(reward.count() == 0);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(model.params.entry(i).value.data == before.entry(i).value.data);
    }
}

TEST_CASE("train: reward-query count is epochs x batches x batch size") {
    ConsistencyModel model = tiny_model(21);
    TimeGrid grid = karras_grid(3, model.eps, model.T);
    QueryCounter reward(unit_reward());
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batches_per_epoch = 2;
    cfg.sample_batch_size = 4;
    cfg.stats_min_count = 2;
    auto history = train_rlcm(model, grid, {0, 1}, reward, cfg, 9);
    REQUIRE(history.size() == 3);
    CHECK(reward.count() == 3ull * 2 * 4);
    CHECK(history.back().reward_queries == 24);
    // constant reward: every advantage is 0, so the policy never moves
    CHECK(history.back().grad_norm == 0.0);
    // queries strictly increase across epochs
    CHECK(history[0].reward_queries < history[1].reward_queries);
    CHECK(history[1].reward_queries < history[2].reward_queries);
}

TEST_CASE("train: rollout collection is identical for any thread count") {
    ConsistencyModel model = tiny_model(22);
    TimeGrid grid = karras_grid(4, model.eps, model.T);
    QueryCounter reward(unit_reward());
    auto serial = collect_rollouts(model, grid, {0, 1, 2}, 12, 77, 0, reward, 1);
    auto parallel = collect_rollouts(model, grid, {0, 1, 2}, 12, 77, 0, reward, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].context == parallel[i].context);
        CHECK(serial[i].terminal.data == parallel[i].terminal.data);
        CHECK(serial[i].log_probs == parallel[i].log_probs);
    }
}
