#include "cmrl/mlp.hpp"

#include <cmath>
#include <string>

#include "cmrl/error.hpp"

namespace cmrl {

static std::string weight_name(int layer) {
    return "layer" + std::to_string(layer) + ".weight";
}

static std::string bias_name(int layer) {
    return "layer" + std::to_string(layer) + ".bias";
}

void mlp_init(ParamStore& store, const MlpSpec& spec, Rng& rng) {
    require(spec.in_dim >= 1 && spec.out_dim >= 1, "mlp_init: bad spec dims");
    int64_t prev = spec.in_dim;
    for (int l = 0; l < spec.num_layers(); ++l) {
        int64_t width = (l < static_cast<int>(spec.hidden.size())) ? spec.hidden[static_cast<size_t>(l)]
                                                                   : spec.out_dim;
        double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        store.add(weight_name(l), [&] {
            Tensor w = Tensor::zeros({width, prev});
            for (double& v : w.data) {
                v = rng.uniform01() * 2.0 * bound - bound;
            }
            return w;
        }());
        store.add(bias_name(l), Tensor::zeros({width}));
        prev = width;
    }
}

Tensor mlp_forward(const ParamStore& store, const MlpSpec& spec, const Tensor& x,
                   const Tensor& t_embed, const Tensor& c_embed) {
    std::vector<const Tensor*> parts{&x};
    if (!t_embed.empty()) {
        parts.push_back(&t_embed);
    }
    if (!c_embed.empty()) {
        parts.push_back(&c_embed);
    }
    Tensor h = concat(parts);
    if (h.numel() != spec.in_dim) {
        throw DimensionError("mlp_forward: layer0 expects width " + std::to_string(spec.in_dim) +
                             ", got " + std::to_string(h.numel()));
    }
    for (int l = 0; l < spec.num_layers(); ++l) {
        const Tensor& W = store.value(weight_name(l));
        const Tensor& b = store.value(bias_name(l));
        if (W.cols() != h.numel()) {
            throw DimensionError("mlp_forward: shape mismatch at layer" + std::to_string(l) +
                                 " (" + W.shape_str() + " vs input " + h.shape_str() + ")");
        }
        // accumulation order mirrors the taped path (matvec, then bias) so
        // raw and taped evaluations agree bit for bit
        Tensor out = Tensor::zeros({W.rows()});
        for (int64_t r = 0; r < W.rows(); ++r) {
            double s = 0.0;
            for (int64_t c = 0; c < W.cols(); ++c) {
                s += W.at2(r, c) * h[c];
            }
            out[r] = s + b[r];
        }
        if (l + 1 < spec.num_layers()) {
            for (double& v : out.data) {
                v = std::tanh(v);
            }
        }
        h = std::move(out);
    }
    h.check_finite("mlp_forward output");
    return h;
}

ValueId mlp_forward_taped(Tape& tape, ParamStore& store, const MlpSpec& spec,
                          const std::vector<ValueId>& input_parts) {
    require(!input_parts.empty(), "mlp_forward_taped: no inputs");
    ValueId h = input_parts.size() == 1 ? input_parts[0] : tape.concat_(input_parts);
    if (tape.value(h).numel() != spec.in_dim) {
        throw DimensionError("mlp_forward: layer0 expects width " + std::to_string(spec.in_dim) +
                             ", got " + std::to_string(tape.value(h).numel()));
    }
    for (int l = 0; l < spec.num_layers(); ++l) {
        ValueId w = tape.param(store, weight_name(l));
        ValueId b = tape.param(store, bias_name(l));
        h = tape.add(tape.matvec(w, h), b);
        if (l + 1 < spec.num_layers()) {
            h = tape.tanh_(h);
        }
    }
    tape.value(h).check_finite("mlp_forward output");
    return h;
}

Tensor time_features(double t, int n_features) {
    require(n_features >= 2 && n_features % 2 == 0, "time_features: even count >= 2 required");
    require(t > 0.0, "time_features: t must be positive");
    int k = n_features / 2;
    Tensor out = Tensor::zeros({n_features});
    double lt = std::log(t);
    double w = 0.25;
    for (int i = 0; i < k; ++i) {
        out[2 * i] = std::sin(w * lt);
        out[2 * i + 1] = std::cos(w * lt);
        w *= 2.0;
    }
    return out;
}

}  // namespace cmrl
