#include <cmath>

#include "cmrl/error.hpp"
#include "cmrl/rollout.hpp"
#include "cmrl/time_grid.hpp"
#include "doctest.h"

using namespace cmrl;

namespace {

ConsistencyModel seeded_model(uint64_t seed) {
    Rng rng(seed);
    return ConsistencyModel::create(2, 4, {16, 16}, rng);
}

}  // namespace

TEST_CASE("karras_grid: H=1 has the endpoints only") {
    TimeGrid grid = karras_grid(1, 0.002, 80.0);
    REQUIRE(grid.points.size() == 2);
    CHECK(grid.tau(0) == 80.0);
    CHECK(grid.tau(1) == 0.002);
}

TEST_CASE("karras_grid: H=2 midpoint matches the closed form") {
    TimeGrid grid = karras_grid(2, 0.002, 80.0, 7.0);
    // (80^(1/7) + 0.5 (0.002^(1/7) - 80^(1/7)))^7, evaluated independently
    // in extended precision beforehand
    CHECK(grid.tau(1) == doctest::Approx(2.515218976147159).epsilon(1e-12));

    long double a = std::pow(80.0L, 1.0L / 7.0L);
    long double b = std::pow(0.002L, 1.0L / 7.0L);
    long double mid = std::pow(a + 0.5L * (b - a), 7.0L);
    CHECK(grid.tau(1) == doctest::Approx(static_cast<double>(mid)).epsilon(1e-12));
}

TEST_CASE("karras_grid: strict decrease for random valid inputs") {
    Rng rng(555);
    for (int rep = 0; rep < 100; ++rep) {
        int h = 1 + rng.uniform_int(30);
        double eps = 1e-4 + rng.uniform01() * 0.1;
        double t = eps + 0.5 + rng.uniform01() * 100.0;
        double rho = 0.5 + rng.uniform01() * 10.0;
        TimeGrid grid = karras_grid(h, eps, t, rho);
        CHECK(grid.tau(0) == t);
        CHECK(grid.tau(h) == eps);
        for (int i = 0; i < h; ++i) {
            CHECK(grid.tau(i) > grid.tau(i + 1));
        }
    }
}

TEST_CASE("karras_grid: contract errors") {
    CHECK_THROWS_AS(karras_grid(0, 0.002, 80.0), ContractError);
    CHECK_THROWS_AS(karras_grid(4, 80.0, 0.002), ContractError);
    CHECK_THROWS_AS(karras_grid(4, 0.002, 80.0, -1.0), ContractError);
}

TEST_CASE("gaussian_logprob: closed-form values and symmetry") {
    Tensor mean2 = Tensor::vec({0.4, -0.3});
    CHECK(gaussian_logprob(mean2, 1.0, mean2) ==
          doctest::Approx(-1.8378770664093453).epsilon(1e-14));

    Tensor m1 = Tensor::vec({1.0});
    CHECK(gaussian_logprob(m1, 2.0, Tensor::vec({3.0})) ==
          doctest::Approx(-2.112085713764618).epsilon(1e-14));

    Tensor delta = Tensor::vec({0.123, -0.456});
    CHECK(gaussian_logprob(mean2, 0.7, add(mean2, delta)) ==
          doctest::Approx(gaussian_logprob(mean2, 0.7, sub(mean2, delta))).epsilon(1e-14));

    CHECK_THROWS_AS(gaussian_logprob(mean2, 0.0, mean2), ContractError);
    CHECK_THROWS_AS(gaussian_logprob(mean2, -1.0, mean2), ContractError);
}

TEST_CASE("multistep_sample: H=1 is a single consistency call") {
    ConsistencyModel model = seeded_model(1);
    TimeGrid grid = karras_grid(1, model.eps, model.T);
    Rng rng_a(42);
    Tensor out = multistep_sample(model, grid, 2, rng_a);
    Rng rng_b(42);
    Tensor x_T = scale(rng_b.normal_vec(2), model.T);
    Tensor expected = model.apply(x_T, model.T, 2);
    CHECK(out.data == expected.data);
}

TEST_CASE("multistep_sample: bitwise deterministic under a fixed seed") {
    ConsistencyModel model = seeded_model(2);
    TimeGrid grid = karras_grid(8, model.eps, model.T);
    Rng rng_a(7);
    Rng rng_b(7);
    CHECK(multistep_sample(model, grid, 1, rng_a).data ==
          multistep_sample(model, grid, 1, rng_b).data);
}

TEST_CASE("multistep_sample: zero noise reduces to composed consistency calls") {
    ConsistencyModel model = seeded_model(3);
    TimeGrid grid = karras_grid(2, model.eps, model.T);
    Tensor x_T = Tensor::vec({12.0, -5.0});
    Tensor out = multistep_sample_deterministic(model, grid, 0, x_T, {Tensor::zeros({2})});
    Tensor expected = model.apply(model.apply(x_T, model.T, 0), grid.tau(1), 0);
    CHECK(out.data == expected.data);
}

TEST_CASE("multistep_sample: deterministic replay matches the stochastic path") {
    ConsistencyModel model = seeded_model(4);
    TimeGrid grid = karras_grid(5, model.eps, model.T);
    Rng rng_a(9);
    Tensor out = multistep_sample(model, grid, 3, rng_a);

    Rng rng_b(9);
    Tensor x_T = scale(rng_b.normal_vec(2), model.T);
    std::vector<Tensor> noises;
    for (int n = 1; n < grid.horizon; ++n) {
        noises.push_back(rng_b.normal_vec(2));
    }
    CHECK(out.data == multistep_sample_deterministic(model, grid, 3, x_T, noises).data);
}

TEST_CASE("rollout: terminal equals multistep_sample under a shared stream") {
    ConsistencyModel model = seeded_model(5);
    TimeGrid grid = karras_grid(8, model.eps, model.T);
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng_a(seed);
        Rng rng_b(seed);
        Trajectory traj = rollout(model, grid, 1, rng_a);
        Tensor sample = multistep_sample(model, grid, 1, rng_b);
        CHECK(traj.terminal.data == sample.data);
    }
}

TEST_CASE("rollout: H=8 carries exactly 7 log-probs and the record is consistent") {
    ConsistencyModel model = seeded_model(6);
    TimeGrid grid = karras_grid(8, model.eps, model.T);
    Rng rng(11);
    Trajectory traj = rollout(model, grid, 2, rng);
    CHECK(traj.log_probs.size() == 7);
    CHECK(traj.states.size() == 9);
    CHECK(traj.actions.size() == 8);
    for (double lp : traj.log_probs) {
        CHECK(std::isfinite(lp));
    }
    // deterministic transitions: action is the next state
    for (size_t t = 0; t < traj.actions.size(); ++t) {
        CHECK(traj.actions[t].data == traj.states[t + 1].data);
    }
    // stds shrink along the trajectory
    for (int t = 0; t + 1 < grid.horizon; ++t) {
        CHECK(policy_std(grid, t) >= policy_std(grid, t + 1));
    }
    CHECK(policy_std(grid, grid.horizon - 1) == 0.0);
}

TEST_CASE("rollout: replayed log-probs equal stored log-probs to 1e-12") {
    ConsistencyModel model = seeded_model(7);
    TimeGrid grid = karras_grid(6, model.eps, model.T);
    Rng rng(13);
    Trajectory traj = rollout(model, grid, 0, rng);
    std::vector<double> replayed = replay_log_probs(model, model.params, grid, traj);
    REQUIRE(replayed.size() == traj.log_probs.size());
    for (size_t t = 0; t < replayed.size(); ++t) {
        CHECK(std::abs(replayed[t] - traj.log_probs[t]) <= 1e-12);
    }
}

TEST_CASE("rollout: grid/model mismatch is rejected") {
    ConsistencyModel model = seeded_model(8);
    TimeGrid grid = karras_grid(4, 0.01, 50.0);
    Rng rng(1);
    CHECK_THROWS_AS(rollout(model, grid, 0, rng), ContractError);
}
