#include "cmrl/datasets.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

Mixture2D::Mixture2D(double radius, double component_std)
    : radius_(radius), component_std_(component_std) {
    require(radius > 0.0 && component_std > 0.0, "mixture2d: positive radius/std required");
}

Tensor Mixture2D::component_mean(int context) const {
    require(context >= 0 && context < vocab(), "mixture2d: context out of range");
    double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(context) / 8.0;
    return Tensor::vec({radius_ * std::cos(theta), radius_ * std::sin(theta)});
}

Tensor Mixture2D::sample(Rng& rng, int context) const {
    Tensor mu = component_mean(context);
    return Tensor::vec({mu[0] + component_std_ * rng.normal(), mu[1] + component_std_ * rng.normal()});
}

Tensor Patterns8x8::sample(Rng& rng, int context) const {
    require(context >= 0 && context < vocab(), "patterns8: context out of range");
    Tensor img = Tensor::zeros({64});
    const double hi = 0.9;
    const double lo = 0.1;
    if (context == 0) {
        // horizontal stripes, period 4, random phase
        int phase = rng.uniform_int(4);
        for (int y = 0; y < 8; ++y) {
            double v = (((y + phase) / 2) % 2 == 0) ? hi : lo;
            for (int x = 0; x < 8; ++x) {
                img[y * 8 + x] = v;
            }
        }
    } else if (context == 1) {
        // disk with jittered center
        double cx = 3.5 + rng.uniform01() - 0.5;
        double cy = 3.5 + rng.uniform01() - 0.5;
        double r = 2.5;
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                double d = std::hypot(x - cx, y - cy);
                img[y * 8 + x] = d <= r ? hi : lo;
            }
        }
    } else {
        // 2x2 checkers, random parity
        int parity = rng.uniform_int(2);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                img[y * 8 + x] = (((x / 2 + y / 2 + parity) % 2) == 0) ? hi : lo;
            }
        }
    }
    // pixel noise, clipped to [0,1]
    for (double& v : img.data) {
        v = std::min(1.0, std::max(0.0, v + 0.03 * rng.normal()));
    }
    return img;
}

std::unique_ptr<Dataset> make_dataset(const std::string& name) {
    if (name == "mixture2d") {
        return std::make_unique<Mixture2D>();
    }
    if (name == "patterns8") {
        return std::make_unique<Patterns8x8>();
    }
    throw ContractError("unknown dataset: " + name);
}

}  // namespace cmrl
