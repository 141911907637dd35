#ifndef CMRL_DATASETS_HPP
#define CMRL_DATASETS_HPP

#include <memory>
#include <string>

#include "cmrl/rng.hpp"
#include "cmrl/tensor.hpp"

namespace cmrl {

/// Synthetic conditional dataset: draws clean samples x0 given a context id
/// from a finite vocabulary.
class Dataset {
public:
    virtual ~Dataset() = default;
    virtual int64_t dim() const = 0;
    virtual int vocab() const = 0;
    virtual std::string name() const = 0;
    virtual Tensor sample(Rng& rng, int context) const = 0;
};

/// Eight Gaussians on a circle; context c selects component c.
class Mixture2D : public Dataset {
public:
    Mixture2D(double radius = 2.0, double component_std = 0.25);

    int64_t dim() const override { return 2; }
    int vocab() const override { return 8; }
    std::string name() const override { return "mixture2d"; }
    Tensor sample(Rng& rng, int context) const override;

    /// Component mean for context c (also the goal point of the 2-D
    /// target reward).
    Tensor component_mean(int context) const;

    double radius() const { return radius_; }
    double component_std() const { return component_std_; }

private:
    double radius_;
    double component_std_;
};

/// 8x8 grayscale patterns in [0,1]. Context 0 = stripes, 1 = disks,
/// 2 = checkers; jittered per draw.
class Patterns8x8 : public Dataset {
public:
    int64_t dim() const override { return 64; }
    int vocab() const override { return 3; }
    std::string name() const override { return "patterns8"; }
    Tensor sample(Rng& rng, int context) const override;
};

std::unique_ptr<Dataset> make_dataset(const std::string& name);

}  // namespace cmrl

#endif
