#include "cmrl/consistency.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

static void copy_fields(ConsistencyModel& dst, const ConsistencyModel& src) {
    dst.T = src.T;
    dst.eps = src.eps;
    dst.sigma_data = src.sigma_data;
    dst.vocab = src.vocab;
    dst.data_dim = src.data_dim;
    dst.hidden = src.hidden;
    dst.time_feature_dim = src.time_feature_dim;
    dst.context_embed_dim = src.context_embed_dim;
}

ConsistencyModel::ConsistencyModel(const ConsistencyModel& other) : params(other.params) {
    copy_fields(*this, other);
    forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
}

ConsistencyModel& ConsistencyModel::operator=(const ConsistencyModel& other) {
    if (this != &other) {
        params = other.params;
        copy_fields(*this, other);
        forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
    }
    return *this;
}

ConsistencyModel::ConsistencyModel(ConsistencyModel&& other) noexcept
    : params(std::move(other.params)) {
    copy_fields(*this, other);
    forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
}

ConsistencyModel& ConsistencyModel::operator=(ConsistencyModel&& other) noexcept {
    if (this != &other) {
        params = std::move(other.params);
        copy_fields(*this, other);
        forward_calls_.store(other.forward_calls(), std::memory_order_relaxed);
    }
    return *this;
}

ConsistencyModel ConsistencyModel::create(int64_t data_dim, int vocab,
                                          const std::vector<int64_t>& hidden, Rng& rng, double T,
                                          double eps, double sigma_data, int time_feature_dim,
                                          int context_embed_dim) {
    require(0.0 < eps && eps < T, "consistency model: need 0 < eps < T");
    require(sigma_data > 0.0, "consistency model: sigma_data must be positive");
    require(vocab >= 1 && data_dim >= 1, "consistency model: bad dims");
    ConsistencyModel m;
    m.T = T;
    m.eps = eps;
    m.sigma_data = sigma_data;
    m.vocab = vocab;
    m.data_dim = data_dim;
    m.hidden = hidden;
    m.time_feature_dim = time_feature_dim;
    m.context_embed_dim = context_embed_dim;
    mlp_init(m.params, m.mlp_spec(), rng);
    double bound = 1.0 / std::sqrt(static_cast<double>(context_embed_dim));
    Tensor emb = Tensor::zeros({vocab, context_embed_dim});
    for (double& v : emb.data) {
        v = rng.uniform01() * 2.0 * bound - bound;
    }
    m.params.add("context_embedding", std::move(emb));
    return m;
}

MlpSpec ConsistencyModel::mlp_spec() const {
    MlpSpec spec;
    spec.in_dim = data_dim + time_feature_dim + context_embed_dim;
    spec.hidden = hidden;
    spec.out_dim = data_dim;
    return spec;
}

double ConsistencyModel::c_skip(double t) const {
    double d = t - eps;
    return sigma_data * sigma_data / (d * d + sigma_data * sigma_data);
}

double ConsistencyModel::c_out(double t) const {
    return sigma_data * (t - eps) / std::sqrt(sigma_data * sigma_data + t * t);
}

double ConsistencyModel::c_in(double t) const {
    return 1.0 / std::sqrt(t * t + sigma_data * sigma_data);
}

Tensor ConsistencyModel::net_forward(const ParamStore& ps, const Tensor& x, double t,
                                     int context) const {
    Tensor xin = cmrl::scale(x, c_in(t));
    Tensor tf = time_features(t, time_feature_dim);
    const Tensor& emb = ps.value("context_embedding");
    Tensor ce = Tensor::zeros({emb.cols()});
    for (int64_t j = 0; j < emb.cols(); ++j) {
        ce[j] = emb.at2(context, j);
    }
    return mlp_forward(ps, mlp_spec(), xin, tf, ce);
}

Tensor ConsistencyModel::apply_with(const ParamStore& alt_params, const Tensor& x, double t,
                                    int context) const {
    require(t >= eps && t <= T, "consistency_apply: t outside [eps, T]");
    require(context >= 0 && context < vocab, "consistency_apply: context out of vocabulary");
    require(x.numel() == data_dim, "consistency_apply: wrong data dimension");
    forward_calls_.fetch_add(1, std::memory_order_relaxed);
    if (t == eps) {
        // boundary: f(x, eps, c) = x, bit for bit
        return x;
    }
    Tensor F = net_forward(alt_params, x, t, context);
    Tensor out = cmrl::scale(x, c_skip(t));
    axpy(out, c_out(t), F);
    return out;
}

Tensor ConsistencyModel::apply(const Tensor& x, double t, int context) const {
    return apply_with(params, x, t, context);
}

ValueId ConsistencyModel::apply_taped(Tape& tape, const Tensor& x, double t, int context) {
    require(t > eps && t <= T, "consistency_apply (taped): t outside (eps, T]");
    require(context >= 0 && context < vocab, "consistency_apply: context out of vocabulary");
    require(x.numel() == data_dim, "consistency_apply: wrong data dimension");
    forward_calls_.fetch_add(1, std::memory_order_relaxed);
    ValueId x_leaf = tape.input(x);
    ValueId xin = tape.scale(x_leaf, c_in(t));
    ValueId tf = tape.input(time_features(t, time_feature_dim));
    ValueId ce = tape.row(tape.param(params, "context_embedding"), context);
    ValueId F = mlp_forward_taped(tape, params, mlp_spec(), {xin, tf, ce});
    return tape.add(tape.scale(x_leaf, c_skip(t)), tape.scale(F, c_out(t)));
}

ConsistencyModel ConsistencyModel::clone() const {
    ConsistencyModel m;
    m.params = params.clone();
    m.T = T;
    m.eps = eps;
    m.sigma_data = sigma_data;
    m.vocab = vocab;
    m.data_dim = data_dim;
    m.hidden = hidden;
    m.time_feature_dim = time_feature_dim;
    m.context_embed_dim = context_embed_dim;
    return m;
}

Tensor forward_noise(const Tensor& x0, double t, const Tensor& z) {
    if (!x0.same_shape(z)) {
        throw DimensionError("forward_noise: x0/z shape mismatch " + x0.shape_str() + " vs " +
                             z.shape_str());
    }
    Tensor out = x0;
    axpy(out, t, z);
    return out;
}

static ValueId ct_distance_taped(Tape& tape, ValueId online, const Tensor& target,
                                 const CTConfig& cfg) {
    ValueId diff = tape.sub(online, tape.input(target));
    ValueId sq = tape.sum_(tape.mul(diff, diff));
    if (cfg.metric == CTMetric::squared_l2) {
        return sq;
    }
    double c2 = cfg.huber_c * cfg.huber_c;
    return tape.affine(tape.sqrt_(tape.affine(sq, 1.0, c2)), 1.0, -cfg.huber_c);
}

PretrainResult ct_pretrain(ConsistencyModel& model, const Dataset& dataset, const CTConfig& cfg,
                           Rng& rng) {
    require(cfg.discretization >= 2, "ct_pretrain: discretization must be >= 2");
    require(cfg.ema_decay >= 0.0 && cfg.ema_decay < 1.0, "ct_pretrain: ema_decay in [0,1)");
    require(model.data_dim == dataset.dim() && model.vocab == dataset.vocab(),
            "ct_pretrain: model/dataset mismatch");

    PretrainResult result;
    if (cfg.iterations <= 0) {
        return result;
    }
    TimeGrid grid = karras_grid(cfg.discretization - 1, model.eps, model.T);
    ParamStore target = model.params.clone();
    AdamState adam(model.params);
    result.loss_history.reserve(static_cast<size_t>(cfg.iterations));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        Tape tape;
        ValueId loss_sum = tape.input(Tensor::scalar(0.0));
        for (int b = 0; b < cfg.batch_size; ++b) {
            uint64_t sample_index =
                static_cast<uint64_t>(iter) * static_cast<uint64_t>(cfg.batch_size) +
                static_cast<uint64_t>(b);
            Rng rs = rng.derive(sample_index);
            int c = rs.uniform_int(dataset.vocab());
            Tensor x0 = dataset.sample(rs, c);
            Tensor z = rs.normal_vec(model.data_dim);
            int interval = rs.uniform_int(cfg.discretization - 1);
            double t_hi = grid.tau(interval);
            double t_lo = grid.tau(interval + 1);
            Tensor target_out =
                model.apply_with(target, forward_noise(x0, t_lo, z), t_lo, c);
            ValueId online = model.apply_taped(tape, forward_noise(x0, t_hi, z), t_hi, c);
            loss_sum = tape.add(loss_sum, ct_distance_taped(tape, online, target_out, cfg));
        }
        ValueId loss = tape.scale(loss_sum, 1.0 / static_cast<double>(cfg.batch_size));
        double loss_value = tape.value(loss)[0];
        if (!std::isfinite(loss_value)) {
            throw NumericError("ct_pretrain: non-finite loss at iteration " + std::to_string(iter));
        }
        backward(tape, loss);
        adam_step(model.params, adam, cfg.lr);
        ema_update(target, model.params, cfg.ema_decay);
        result.loss_history.push_back(loss_value);
    }
    return result;
}

}  // namespace cmrl
