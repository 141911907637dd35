#ifndef CMRL_PARAMS_HPP
#define CMRL_PARAMS_HPP

#include <map>
#include <string>
#include <vector>

#include "cmrl/tensor.hpp"

namespace cmrl {

/// Named parameter tensors with parallel gradient tensors of the same
/// shapes. Entries keep insertion order, which fixes the iteration order
/// everywhere (updates, checkpoints, gradient norms) and keeps runs
/// deterministic.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    void add(const std::string& name, Tensor init);

    bool has(const std::string& name) const;
    int index_of(const std::string& name) const;  // -1 when absent

    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;

    size_t size() const { return entries_.size(); }
    Entry& entry(size_t i) { return entries_[i]; }
    const Entry& entry(size_t i) const { return entries_[i]; }

    void zero_grads();
    double grad_norm() const;
    int64_t total_params() const;

    ParamStore clone() const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, size_t> index_;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const ParamStore& params, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8);
};

/// Bias-corrected Adam update from the gradients currently stored in
/// `params`. Aborts with a diagnostic naming the parameter if any
/// gradient entry is NaN.
void adam_step(ParamStore& params, AdamState& state, double lr);

/// Scales all gradients by max_norm/g when the global L2 norm g exceeds
/// max_norm. Returns the factor applied (1 when below threshold).
double clip_grad_norm(ParamStore& params, double max_norm);

/// target <- decay * target + (1 - decay) * online, elementwise.
void ema_update(ParamStore& target, const ParamStore& online, double decay);

}  // namespace cmrl

#endif
