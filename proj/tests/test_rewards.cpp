#include <cmath>
#include <map>

#include "cmrl/error.hpp"
#include "cmrl/rewards.hpp"
#include "doctest.h"

using namespace cmrl;

namespace {

// independent straight-line proxy oracle: direct-formula DCT, map counts,
// textbook entropy
double proxy_oracle(const std::vector<double>& img, int h, int w, double q) {
    const double pi = 3.14159265358979323846;
    std::map<long long, long long> counts;
    long long n = 0;
    for (int by = 0; by < h; by += 8) {
        for (int bx = 0; bx < w; bx += 8) {
            for (int u = 0; u < 8; ++u) {
                for (int v = 0; v < 8; ++v) {
                    double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    double cv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    double s = 0.0;
                    for (int y = 0; y < 8; ++y) {
                        for (int x = 0; x < 8; ++x) {
                            double p = std::round(img[static_cast<size_t>((by + y) * w + bx + x)] *
                                                  255.0);
                            s += p * cu * cv * std::cos((2.0 * y + 1.0) * u * pi / 16.0) *
                                 std::cos((2.0 * x + 1.0) * v * pi / 16.0);
                        }
                    }
                    counts[std::llround(s / q)] += 1;
                    ++n;
                }
            }
        }
    }
    double entropy = 0.0;
    for (const auto& [sym, cnt] : counts) {
        double p = static_cast<double>(cnt) / static_cast<double>(n);
        entropy -= p * std::log2(p);
    }
    return 8.0 + std::ceil(static_cast<double>(n) * entropy / 8.0);
}

}  // namespace

TEST_CASE("compress proxy: constant image sits at the header floor") {
    Tensor img = Tensor::full({64}, 0.5);
    double size = compress_proxy_size(img, 8, 8);
    CHECK(size == proxy_oracle(img.data, 8, 8, 16.0));
    CHECK(size <= 10.0);  // ~8-byte floor plus the lone DC symbol

    Tensor black = Tensor::zeros({64});
    CHECK(compress_proxy_size(black, 8, 8) == 8.0);
}

TEST_CASE("compress proxy: matches the oracle on random images") {
    Rng rng(2718);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor img = rng.uniform_vec(16 * 16, 0.0, 1.0);
        CHECK(compress_proxy_size(img, 16, 16) == proxy_oracle(img.data, 16, 16, 16.0));
    }
}

TEST_CASE("compress proxy: uniform-noise 64x64 lands in the stated band") {
    Rng rng(31415);
    Tensor img = rng.uniform_vec(64 * 64, 0.0, 1.0);
    double size = compress_proxy_size(img, 64, 64);
    double full = 4096.0 * 8.0 / 8.0 + 8.0;
    CHECK(size >= 0.5 * full);
    CHECK(size <= 1.0 * full);
}

TEST_CASE("compress proxy: deterministic across calls") {
    Rng rng(99);
    Tensor img = rng.uniform_vec(64, 0.0, 1.0);
    double a = compress_proxy_size(img, 8, 8);
    double b = compress_proxy_size(img, 8, 8);
    CHECK(a == b);
}

TEST_CASE("compress proxy: invariant to whole-block translation of periodic patterns") {
    // vertical stripes of period 4 on a 16x16 canvas; shifting by 8 px
    // permutes identical blocks
    auto stripes = [](int shift) {
        Tensor img = Tensor::zeros({16 * 16});
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                img[y * 16 + x] = (((x + shift) / 2) % 2 == 0) ? 0.9 : 0.1;
            }
        }
        return img;
    };
    CHECK(compress_proxy_size(stripes(0), 16, 16) == compress_proxy_size(stripes(8), 16, 16));
}

TEST_CASE("compress proxy: pads non-multiple-of-8 sizes by edge replication") {
    Tensor img = Tensor::full({5 * 7}, 0.25);
    double size = compress_proxy_size(img, 5, 7);
    Tensor padded = Tensor::full({64}, 0.25);
    CHECK(size == compress_proxy_size(padded, 8, 8));
}

TEST_CASE("compress proxy: out-of-range pixels are a contract error") {
    Tensor img = Tensor::full({64}, 0.5);
    img[10] = 1.5;
    CHECK_THROWS_AS(compress_proxy_size(img, 8, 8), ContractError);
    img[10] = -0.1;
    CHECK_THROWS_AS(compress_proxy_size(img, 8, 8), ContractError);
}

TEST_CASE("reward_compress / reward_incompress: sign convention and negation") {
    RewardFn rc = reward_compress(8, 8);
    RewardFn ri = reward_incompress(8, 8);
    Tensor flat = Tensor::full({64}, 0.5);
    CHECK(rc(flat, 0) == doctest::Approx(-9.0).epsilon(0.2));  // ~8-byte floor
    Rng rng(123);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor img = rng.uniform_vec(64, 0.0, 1.0);
        CHECK(ri(img, 0) == -rc(img, 0));
    }
    // noise scores higher than a constant image under incompression
    Tensor noise = rng.uniform_vec(64, 0.0, 1.0);
    CHECK(ri(noise, 0) > ri(flat, 0));
}

TEST_CASE("reward_target2d: metric cases") {
    Mixture2D data;
    RewardFn r = reward_target2d(data);
    Tensor goal = data.component_mean(3);
    CHECK(r(goal, 3) == 0.0);

    // 3-4-5 triangle against the context-0 goal at (radius, 0)
    Tensor x = Tensor::vec({data.component_mean(0)[0] + 3.0, data.component_mean(0)[1] + 4.0});
    CHECK(r(x, 0) == doctest::Approx(-5.0).epsilon(1e-12));

    // the best candidate in a finite set is the closest one
    Rng rng(7);
    Tensor best;
    double best_reward = -1e30;
    double best_dist = 1e30;
    for (int i = 0; i < 20; ++i) {
        Tensor cand = rng.normal_vec(2);
        double rew = r(cand, 3);
        double dist = l2_dist(cand, goal);
        if (rew > best_reward) {
            best_reward = rew;
            best = cand;
        }
        best_dist = std::min(best_dist, dist);
    }
    CHECK(l2_dist(best, goal) == doctest::Approx(best_dist).epsilon(1e-12));
}

TEST_CASE("blackbox scorer: deterministic per seed, distinct across seeds") {
    RewardFn a = reward_blackbox_mlp(4, 3, 11);
    RewardFn a2 = reward_blackbox_mlp(4, 3, 11);
    RewardFn b = reward_blackbox_mlp(4, 3, 12);
    Rng rng(5);
    int differs = 0;
    for (int probe = 0; probe < 10; ++probe) {
        Tensor x = rng.normal_vec(4);
        int c = rng.uniform_int(3);
        double sa = a(x, c);
        CHECK(sa == a(x, c));
        CHECK(sa == a2(x, c));
        if (sa != b(x, c)) {
            ++differs;
        }
    }
    CHECK(differs == 10);
}

TEST_CASE("query counter: one increment per evaluation, totals match") {
    QueryCounter counter(RewardFn{"unit", true, [](const Tensor&, int) { return 2.0; }});
    Tensor x = Tensor::vec({0.0, 0.0});
    CHECK(counter.count() == 0);
    for (int i = 0; i < 17; ++i) {
        CHECK(counter(x, 0) == 2.0);
    }
    CHECK(counter.count() == 17);
}

TEST_CASE("make_task_reward: image tasks clamp raw samples into range") {
    Patterns8x8 data;
    RewardFn r = make_task_reward("compress", data, 1);
    Rng rng(3);
    Tensor wild = scale(rng.normal_vec(64), 10.0);  // far outside [0,1]
    CHECK(std::isfinite(r(wild, 0)));
    CHECK_THROWS_AS(make_task_reward("nope", data, 1), ContractError);
}
