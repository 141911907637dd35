#include "cmrl/params.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

void ParamStore::add(const std::string& name, Tensor init) {
    require(index_.find(name) == index_.end(), "duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.shape);
    e.value = std::move(init);
    index_[name] = entries_.size();
    entries_.push_back(std::move(e));
}

bool ParamStore::has(const std::string& name) const {
    return index_.find(name) != index_.end();
}

int ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : static_cast<int>(it->second);
}

Tensor& ParamStore::value(const std::string& name) {
    int i = index_of(name);
    require(i >= 0, "unknown parameter: " + name);
    return entries_[static_cast<size_t>(i)].value;
}

const Tensor& ParamStore::value(const std::string& name) const {
    int i = index_of(name);
    require(i >= 0, "unknown parameter: " + name);
    return entries_[static_cast<size_t>(i)].value;
}

Tensor& ParamStore::grad(const std::string& name) {
    int i = index_of(name);
    require(i >= 0, "unknown parameter: " + name);
    return entries_[static_cast<size_t>(i)].grad;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    int i = index_of(name);
    require(i >= 0, "unknown parameter: " + name);
    return entries_[static_cast<size_t>(i)].grad;
}

void ParamStore::zero_grads() {
    for (Entry& e : entries_) {
        std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
    }
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const Entry& e : entries_) {
        for (double g : e.grad.data) {
            s += g * g;
        }
    }
    return std::sqrt(s);
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const Entry& e : entries_) {
        n += e.value.numel();
    }
    return n;
}

ParamStore ParamStore::clone() const {
    ParamStore out;
    for (const Entry& e : entries_) {
        out.add(e.name, e.value);
    }
    return out;
}

AdamState::AdamState(const ParamStore& params, double beta1_, double beta2_, double eps_)
    : beta1(beta1_), beta2(beta2_), eps(eps_) {
    require(beta1 > 0.0 && beta1 < 1.0, "adam: beta1 must be in (0,1)");
    require(beta2 > 0.0 && beta2 < 1.0, "adam: beta2 must be in (0,1)");
    m.reserve(params.size());
    v.reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        m.push_back(Tensor::zeros(params.entry(i).value.shape));
        v.push_back(Tensor::zeros(params.entry(i).value.shape));
    }
}

void adam_step(ParamStore& params, AdamState& state, double lr) {
    require(lr > 0.0, "adam: lr must be positive");
    require(state.m.size() == params.size(), "adam: state/param size mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        ParamStore::Entry& e = params.entry(i);
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (size_t j = 0; j < e.value.data.size(); ++j) {
            double g = e.grad.data[j];
            if (std::isnan(g)) {
                throw NumericError("NaN gradient in parameter " + e.name);
            }
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g;
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g * g;
            double mhat = m.data[j] / bc1;
            double vhat = v.data[j] / bc2;
            e.value.data[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
    require(max_norm > 0.0, "clip_grad_norm: max_norm must be positive");
    double g = params.grad_norm();
    if (g <= max_norm) {
        return 1.0;
    }
    double factor = max_norm / g;
    for (size_t i = 0; i < params.size(); ++i) {
        for (double& v : params.entry(i).grad.data) {
            v *= factor;
        }
    }
    return factor;
}

void ema_update(ParamStore& target, const ParamStore& online, double decay) {
    require(decay >= 0.0 && decay < 1.0, "ema_update: decay must be in [0,1)");
    require(target.size() == online.size(), "ema_update: parameter count mismatch");
    for (size_t i = 0; i < target.size(); ++i) {
        ParamStore::Entry& t = target.entry(i);
        const ParamStore::Entry& o = online.entry(i);
        require(t.name == o.name, "ema_update: name mismatch at index " + std::to_string(i) +
                                      " (" + t.name + " vs " + o.name + ")");
        require(t.value.same_shape(o.value), "ema_update: shape mismatch for " + t.name);
        for (size_t j = 0; j < t.value.data.size(); ++j) {
            t.value.data[j] = decay * t.value.data[j] + (1.0 - decay) * o.value.data[j];
        }
    }
}

}  // namespace cmrl
