#include "cmrl/surrogate.hpp"

#include <cmath>
#include <string>

#include "cmrl/error.hpp"

namespace cmrl {

static constexpr double kLog2Pi = 1.8378770664093453;

double clipped_surrogate(const std::vector<double>& logp_new, const std::vector<double>& logp_old,
                         double advantage, double eps_clip) {
    require(logp_new.size() == logp_old.size(), "clipped_surrogate: log-prob length mismatch");
    require(eps_clip > 0.0 && eps_clip < 1.0, "clipped_surrogate: eps_clip must be in (0,1)");
    require(std::isfinite(advantage), "clipped_surrogate: advantage must be finite");
    double total = 0.0;
    for (size_t t = 0; t < logp_new.size(); ++t) {
        double ratio = std::exp(logp_new[t] - logp_old[t]);
        if (!std::isfinite(ratio)) {
            throw NumericError("clipped_surrogate: non-finite ratio at step " + std::to_string(t));
        }
        double clipped = std::min(std::max(ratio, 1.0 - eps_clip), 1.0 + eps_clip);
        total += std::min(advantage * ratio, advantage * clipped);
    }
    return total;
}

ValueId clipped_surrogate_taped(Tape& tape, const std::vector<ValueId>& logp_new,
                                const std::vector<double>& logp_old, double advantage,
                                double eps_clip) {
    require(logp_new.size() == logp_old.size(), "clipped_surrogate: log-prob length mismatch");
    require(eps_clip > 0.0 && eps_clip < 1.0, "clipped_surrogate: eps_clip must be in (0,1)");
    ValueId total = tape.input(Tensor::scalar(0.0));
    for (size_t t = 0; t < logp_new.size(); ++t) {
        ValueId ratio = tape.exp_(tape.affine(logp_new[t], 1.0, -logp_old[t]));
        double rv = tape.value(ratio)[0];
        if (!std::isfinite(rv)) {
            throw NumericError("clipped_surrogate: non-finite ratio at step " + std::to_string(t));
        }
        ValueId unclipped = tape.scale(ratio, advantage);
        ValueId clipped = tape.scale(tape.clamp_(ratio, 1.0 - eps_clip, 1.0 + eps_clip), advantage);
        total = tape.add(total, tape.min2(unclipped, clipped));
    }
    return total;
}

bool clip_active(double ratio, double advantage, double eps_clip) {
    if (advantage > 0.0) {
        return ratio > 1.0 + eps_clip;
    }
    if (advantage < 0.0) {
        return ratio < 1.0 - eps_clip;
    }
    return false;
}

ValueId gaussian_logprob_taped(Tape& tape, ValueId mean, double stddev, const Tensor& action) {
    if (stddev <= 0.0) {
        throw ContractError("gaussian_logprob: std must be positive (deterministic steps are not scored)");
    }
    const Tensor& m = tape.value(mean);
    if (!m.same_shape(action)) {
        throw DimensionError("gaussian_logprob: mean/action shape mismatch");
    }
    double d = static_cast<double>(action.numel());
    ValueId diff = tape.sub(tape.input(action), mean);
    ValueId sq = tape.sum_(tape.mul(diff, diff));
    return tape.affine(sq, -1.0 / (2.0 * stddev * stddev),
                       -d * (std::log(stddev) + 0.5 * kLog2Pi));
}

}  // namespace cmrl
