#include "cmrl/rng.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

// splitmix64 finalizer
uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::derive(uint64_t key) const {
    return Rng(mix64(seed_ ^ mix64(key + 1)));
}

uint64_t Rng::next_u64() {
    return engine_();
}

double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] so log is finite
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int Rng::uniform_int(int n) {
    require(n > 0, "uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

Tensor Rng::normal_vec(int64_t n) {
    Tensor t = Tensor::zeros({n});
    for (int64_t i = 0; i < n; ++i) {
        t[i] = normal();
    }
    return t;
}

Tensor Rng::uniform_vec(int64_t n, double lo, double hi) {
    Tensor t = Tensor::zeros({n});
    for (int64_t i = 0; i < n; ++i) {
        t[i] = lo + (hi - lo) * uniform01();
    }
    return t;
}

}  // namespace cmrl
