#ifndef CMRL_RNG_HPP
#define CMRL_RNG_HPP

#include <cstdint>
#include <random>

#include "cmrl/tensor.hpp"

namespace cmrl {

/// Deterministic random source. The engine (mt19937_64) and every
/// distribution here are specified exactly, so identical seeds produce
/// bitwise-identical streams on any platform. `derive(key)` yields an
/// independent stream for (seed, key) without advancing the parent,
/// which is what makes batched rollouts reproducible under any
/// scheduling order.
class Rng {
public:
    explicit Rng(uint64_t seed);

    Rng derive(uint64_t key) const;

    uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    /// Standard normal via Box-Muller (spare value cached).
    double normal();
    /// Uniform integer in [0, n).
    int uniform_int(int n);

    Tensor normal_vec(int64_t n);
    Tensor uniform_vec(int64_t n, double lo, double hi);

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

uint64_t mix64(uint64_t x);

}  // namespace cmrl

#endif
