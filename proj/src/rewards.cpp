#include "cmrl/rewards.hpp"

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "cmrl/error.hpp"
#include "cmrl/mlp.hpp"

namespace cmrl {

// 2-D orthonormal DCT-II of one 8x8 block, separable.
static void dct8x8(const double in[64], double out[64]) {
    static const auto basis = [] {
        std::array<std::array<double, 8>, 8> b{};
        const double pi = 3.14159265358979323846;
        for (int k = 0; k < 8; ++k) {
            double ck = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) {
                b[static_cast<size_t>(k)][static_cast<size_t>(n)] =
                    ck * std::cos((2.0 * n + 1.0) * k * pi / 16.0);
            }
        }
        return b;
    }();
    double tmp[64];
    for (int y = 0; y < 8; ++y) {
        for (int k = 0; k < 8; ++k) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) {
                s += basis[k][x] * in[y * 8 + x];
            }
            tmp[y * 8 + k] = s;
        }
    }
    for (int k = 0; k < 8; ++k) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) {
                s += basis[k][y] * tmp[y * 8 + x];
            }
            out[k * 8 + x] = s;
        }
    }
}

double compress_proxy_size(const Tensor& image, int h, int w, double quant_step) {
    require(h >= 1 && w >= 1, "compress_proxy_size: bad image size");
    require(image.numel() == static_cast<int64_t>(h) * w, "compress_proxy_size: pixel count mismatch");
    require(quant_step > 0.0, "compress_proxy_size: quant step must be positive");
    for (double v : image.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ContractError("compress_proxy_size: pixel values must lie in [0,1]");
        }
    }

    int ph = (h + 7) / 8 * 8;
    int pw = (w + 7) / 8 * 8;
    std::vector<double> pixels(static_cast<size_t>(ph) * pw);
    for (int y = 0; y < ph; ++y) {
        int sy = std::min(y, h - 1);
        for (int x = 0; x < pw; ++x) {
            int sx = std::min(x, w - 1);
            pixels[static_cast<size_t>(y) * pw + x] =
                std::round(image[static_cast<int64_t>(sy) * w + sx] * 255.0);
        }
    }

    std::map<long long, int64_t> counts;
    int64_t n_symbols = 0;
    double block[64];
    double coef[64];
    for (int by = 0; by < ph; by += 8) {
        for (int bx = 0; bx < pw; bx += 8) {
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    block[y * 8 + x] = pixels[static_cast<size_t>(by + y) * pw + (bx + x)];
                }
            }
            dct8x8(block, coef);
            for (int i = 0; i < 64; ++i) {
                long long q = std::llround(coef[i] / quant_step);
                counts[q] += 1;
                n_symbols += 1;
            }
        }
    }

    double entropy = 0.0;
    for (const auto& [sym, cnt] : counts) {
        double p = static_cast<double>(cnt) / static_cast<double>(n_symbols);
        entropy -= p * std::log2(p);
    }
    return 8.0 + std::ceil(static_cast<double>(n_symbols) * entropy / 8.0);
}

RewardFn reward_compress(int h, int w) {
    return RewardFn{"compress", true, [h, w](const Tensor& img, int) {
                        return -compress_proxy_size(img, h, w);
                    }};
}

RewardFn reward_incompress(int h, int w) {
    return RewardFn{"incompress", true, [h, w](const Tensor& img, int) {
                        return compress_proxy_size(img, h, w);
                    }};
}

RewardFn reward_target2d(const Mixture2D& dataset) {
    std::vector<Tensor> goals;
    goals.reserve(static_cast<size_t>(dataset.vocab()));
    for (int c = 0; c < dataset.vocab(); ++c) {
        goals.push_back(dataset.component_mean(c));
    }
    return RewardFn{"target2d", true, [goals](const Tensor& x, int c) {
                        require(x.numel() == 2, "target2d: 2-D sample expected");
                        require(c >= 0 && c < static_cast<int>(goals.size()),
                                "target2d: context out of range");
                        return -l2_dist(x, goals[static_cast<size_t>(c)]);
                    }};
}

RewardFn reward_blackbox_mlp(int64_t input_dim, int vocab, uint64_t scorer_seed) {
    // frozen scorer weights; never updated, never differentiated
    auto params = std::make_shared<ParamStore>();
    Rng rng(mix64(scorer_seed ^ 0xb1ac6b0dULL));
    MlpSpec spec;
    spec.in_dim = input_dim + 4;
    spec.hidden = {16};
    spec.out_dim = 1;
    mlp_init(*params, spec, rng);
    Tensor ctx_emb = Tensor::zeros({vocab, 4});
    for (double& v : ctx_emb.data) {
        v = rng.uniform01() * 2.0 - 1.0;
    }
    params->add("context_embedding", std::move(ctx_emb));
    return RewardFn{
        "blackbox", true, [params, spec, vocab](const Tensor& x, int c) {
            require(x.numel() == spec.in_dim - 4, "blackbox scorer: wrong sample dimension");
            require(c >= 0 && c < vocab, "blackbox scorer: context out of range");
            const Tensor& emb = params->value("context_embedding");
            Tensor ce = Tensor::zeros({4});
            for (int64_t j = 0; j < 4; ++j) {
                ce[j] = emb.at2(c, j);
            }
            return mlp_forward(*params, spec, x, ce)[0];
        }};
}

static Tensor clamp01(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) {
        v = std::min(1.0, std::max(0.0, v));
    }
    return out;
}

RewardFn make_task_reward(const std::string& task, const Dataset& dataset, uint64_t scorer_seed) {
    if (task == "target2d") {
        const auto* mix = dynamic_cast<const Mixture2D*>(&dataset);
        require(mix != nullptr, "target2d reward requires the mixture2d dataset");
        return reward_target2d(*mix);
    }
    if (task == "compress" || task == "incompress") {
        int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(dataset.dim()))));
        require(static_cast<int64_t>(side) * side == dataset.dim(),
                "compression tasks require square images");
        RewardFn base = task == "compress" ? reward_compress(side, side)
                                           : reward_incompress(side, side);
        auto inner = base.fn;
        return RewardFn{base.name, true,
                        [inner](const Tensor& x, int c) { return inner(clamp01(x), c); }};
    }
    if (task == "blackbox") {
        return reward_blackbox_mlp(dataset.dim(), dataset.vocab(), scorer_seed);
    }
    throw ContractError("unknown task: " + task);
}

}  // namespace cmrl
