#ifndef CMRL_ROLLOUT_HPP
#define CMRL_ROLLOUT_HPP

#include <vector>

#include "cmrl/consistency.hpp"
#include "cmrl/rng.hpp"
#include "cmrl/tensor.hpp"
#include "cmrl/time_grid.hpp"

namespace cmrl {

/// log N(a; mean, std^2 I) for an isotropic Gaussian over d = len(mean)
/// coordinates. std must be strictly positive; deterministic steps are
/// never scored.
double gaussian_logprob(const Tensor& mean, double stddev, const Tensor& a);

/// One sampled generation, recorded as a decision-process trajectory.
/// states has horizon+1 entries (x at each grid time), actions has horizon
/// entries with actions[t] == states[t+1], and log_probs has horizon-1
/// entries: the final step renoises with zero std and is deterministic.
struct Trajectory {
    int context = 0;
    std::vector<Tensor> states;
    std::vector<Tensor> actions;
    std::vector<double> log_probs;
    Tensor terminal;
    double reward = 0.0;
    double advantage = 0.0;
};

/// Policy std at step t: sqrt(tau_{t+1}^2 - eps^2). Zero only at the final
/// step, where tau_{t+1} = eps.
double policy_std(const TimeGrid& grid, int step);

/// Multistep sampling: apply f at T, then alternate partial renoising
/// (std sqrt(tau^2 - eps^2)) with f at each interior grid time. horizon 1
/// is a single consistency call.
Tensor multistep_sample(const ConsistencyModel& model, const TimeGrid& grid, int context, Rng& rng);

/// Replay form of the sampler with explicit noise: x_T given, one noise
/// vector per interior grid time (horizon - 1 of them).
Tensor multistep_sample_deterministic(const ConsistencyModel& model, const TimeGrid& grid,
                                      int context, const Tensor& x_T,
                                      const std::vector<Tensor>& noises);

/// The same computation as multistep_sample, consuming the RNG stream in
/// the same order, but recording states, actions and per-step Gaussian
/// log-densities. The terminal sample equals multistep_sample's output
/// under a shared stream.
Trajectory rollout(const ConsistencyModel& model, const TimeGrid& grid, int context, Rng& rng);

/// Re-evaluates log pi(a_t | s_t) for stored trajectory steps under the
/// given parameters (no tape).
std::vector<double> replay_log_probs(const ConsistencyModel& model, const ParamStore& params,
                                     const TimeGrid& grid, const Trajectory& traj);

/// Human-readable trajectory record for debugging dumps.
std::string format_trajectory(const Trajectory& traj, const TimeGrid& grid);

}  // namespace cmrl

#endif
