#ifndef CMRL_SURROGATE_HPP
#define CMRL_SURROGATE_HPP

#include <vector>

#include "cmrl/autograd.hpp"

namespace cmrl {

/// Clipped importance-sampling objective for one trajectory, summed over
/// its stochastic steps (to be maximized):
///   sum_t min( A * ratio_t, A * clip(ratio_t, 1 - eps_clip, 1 + eps_clip) )
/// with ratio_t = exp(logp_new_t - logp_old_t).
double clipped_surrogate(const std::vector<double>& logp_new, const std::vector<double>& logp_old,
                         double advantage, double eps_clip);

/// Same objective assembled on a tape; logp_new entries are tape nodes so
/// gradients flow into the new policy only.
ValueId clipped_surrogate_taped(Tape& tape, const std::vector<ValueId>& logp_new,
                                const std::vector<double>& logp_old, double advantage,
                                double eps_clip);

/// Whether the clipped branch decides the min for this (ratio, advantage):
/// true when clipping actually changes the objective value.
bool clip_active(double ratio, double advantage, double eps_clip);

/// Gaussian log-density node with a tape-recorded mean and fixed std.
ValueId gaussian_logprob_taped(Tape& tape, ValueId mean, double stddev, const Tensor& action);

}  // namespace cmrl

#endif
