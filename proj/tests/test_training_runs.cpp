// Training-run oracles: reward fine-tuning moves the policy the way the
// reward says, for both arms. Budgets are kept small; the acceptance suite
// runs the full-scale versions.

#include "cmrl/diffusion.hpp"
#include "cmrl/trainer.hpp"
#include "doctest.h"

using namespace cmrl;

TEST_CASE("rlcm fine-tuning raises the frozen black-box score above its epoch-0 level") {
    Mixture2D data;
    Rng init(101);
    ConsistencyModel model = ConsistencyModel::create(2, 8, {32, 32}, init);
    CTConfig pcfg;
    pcfg.iterations = 1500;
    pcfg.batch_size = 32;
    pcfg.lr = 2e-3;
    Rng prng(1);
    ct_pretrain(model, data, pcfg, prng);

    TimeGrid grid = karras_grid(8, model.eps, model.T);
    std::vector<int> contexts{0, 1, 2, 3, 4, 5, 6, 7};
    RewardFn reward = reward_blackbox_mlp(2, 8, 7);
    EvalResult base = evaluate_policy(model, grid, contexts, reward, 150, 777);

    QueryCounter counter(reward);
    TrainConfig cfg;
    cfg.epochs = 120;
    train_rlcm(model, grid, contexts, counter, cfg, 1);
    EvalResult fin = evaluate_policy(model, grid, contexts, reward, 150, 778);
    CHECK(fin.mean_reward > base.mean_reward);
}

TEST_CASE("ddpo fine-tuning improves the rollout reward on the 2-D target task") {
    Mixture2D data;
    Rng init(102);
    ScoreModel model = ScoreModel::create(2, 8, {32, 32}, 50, init);
    DsmConfig pcfg;
    pcfg.iterations = 1500;
    pcfg.batch_size = 32;
    pcfg.lr = 2e-3;
    Rng prng(1);
    dsm_pretrain(model, data, pcfg, prng);

    std::vector<int> contexts{0, 1, 2, 3, 4, 5, 6, 7};
    QueryCounter counter(reward_target2d(data));
    TrainConfig cfg;
    cfg.epochs = 80;
    auto history = train_ddpo(model, contexts, counter, cfg, 1);
    REQUIRE(history.size() == 80);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 10; ++i) {
        first += history[static_cast<size_t>(i)].reward_mean;
        last += history[history.size() - 1 - static_cast<size_t>(i)].reward_mean;
    }
    CHECK(last / 10.0 > first / 10.0);
}
