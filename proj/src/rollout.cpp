#include "cmrl/rollout.hpp"

#include <cmath>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

static constexpr double kLog2Pi = 1.8378770664093453;

double gaussian_logprob(const Tensor& mean, double stddev, const Tensor& a) {
    if (stddev <= 0.0) {
        throw ContractError("gaussian_logprob: std must be positive (deterministic steps are not scored)");
    }
    if (!mean.same_shape(a)) {
        throw DimensionError("gaussian_logprob: mean/action shape mismatch");
    }
    double sq = 0.0;
    for (size_t i = 0; i < mean.data.size(); ++i) {
        double d = a.data[i] - mean.data[i];
        sq += d * d;
    }
    double d = static_cast<double>(mean.numel());
    // evaluated as k*sq + b, matching the taped form bit for bit
    double k = -1.0 / (2.0 * stddev * stddev);
    double b = -d * (std::log(stddev) + 0.5 * kLog2Pi);
    return k * sq + b;
}

double policy_std(const TimeGrid& grid, int step) {
    require(step >= 0 && step < grid.horizon, "policy_std: step out of range");
    double tau_next = grid.tau(step + 1);
    double eps = grid.eps();
    return std::sqrt(std::max(0.0, tau_next * tau_next - eps * eps));
}

static void check_grid_model(const ConsistencyModel& model, const TimeGrid& grid) {
    require(grid.T() == model.T && grid.eps() == model.eps,
            "rollout: grid endpoints do not match the model's (eps, T)");
}

Tensor multistep_sample(const ConsistencyModel& model, const TimeGrid& grid, int context,
                        Rng& rng) {
    check_grid_model(model, grid);
    Tensor x = scale(rng.normal_vec(model.data_dim), grid.T());
    x = model.apply(x, grid.T(), context);
    for (int n = 1; n < grid.horizon; ++n) {
        double tau = grid.tau(n);
        double std_n = std::sqrt(tau * tau - model.eps * model.eps);
        Tensor z = rng.normal_vec(model.data_dim);
        Tensor noised = x;
        axpy(noised, std_n, z);
        x = model.apply(noised, tau, context);
    }
    x.check_finite("multistep_sample output");
    return x;
}

Tensor multistep_sample_deterministic(const ConsistencyModel& model, const TimeGrid& grid,
                                      int context, const Tensor& x_T,
                                      const std::vector<Tensor>& noises) {
    check_grid_model(model, grid);
    require(noises.size() == static_cast<size_t>(grid.horizon) - 1,
            "multistep_sample_deterministic: need horizon-1 noise vectors");
    Tensor x = model.apply(x_T, grid.T(), context);
    for (int n = 1; n < grid.horizon; ++n) {
        double tau = grid.tau(n);
        double std_n = std::sqrt(tau * tau - model.eps * model.eps);
        Tensor noised = x;
        axpy(noised, std_n, noises[static_cast<size_t>(n) - 1]);
        x = model.apply(noised, tau, context);
    }
    return x;
}

Trajectory rollout(const ConsistencyModel& model, const TimeGrid& grid, int context, Rng& rng) {
    check_grid_model(model, grid);
    Trajectory traj;
    traj.context = context;
    traj.states.reserve(static_cast<size_t>(grid.horizon) + 1);
    traj.actions.reserve(static_cast<size_t>(grid.horizon));
    traj.log_probs.reserve(static_cast<size_t>(grid.horizon) - 1);

    traj.states.push_back(scale(rng.normal_vec(model.data_dim), grid.T()));
    for (int t = 0; t < grid.horizon; ++t) {
        Tensor mean = model.apply(traj.states.back(), grid.tau(t), context);
        double stddev = policy_std(grid, t);
        Tensor action = mean;
        if (t < grid.horizon - 1) {
            Tensor z = rng.normal_vec(model.data_dim);
            axpy(action, stddev, z);
            double lp = gaussian_logprob(mean, stddev, action);
            if (!std::isfinite(lp)) {
                throw NumericError("rollout: non-finite log-prob at step " + std::to_string(t));
            }
            traj.log_probs.push_back(lp);
        }
        // deterministic transition: the next state is the action itself
        traj.actions.push_back(action);
        traj.states.push_back(action);
    }
    traj.terminal = traj.actions.back();
    traj.terminal.check_finite("rollout terminal sample");
    return traj;
}

std::vector<double> replay_log_probs(const ConsistencyModel& model, const ParamStore& params,
                                     const TimeGrid& grid, const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.log_probs.size());
    for (int t = 0; t + 1 < grid.horizon; ++t) {
        Tensor mean = model.apply_with(params, traj.states[static_cast<size_t>(t)], grid.tau(t),
                                       traj.context);
        out.push_back(gaussian_logprob(mean, policy_std(grid, t), traj.actions[static_cast<size_t>(t)]));
    }
    return out;
}

std::string format_trajectory(const Trajectory& traj, const TimeGrid& grid) {
    std::ostringstream os;
    os << "trajectory context=" << traj.context << " reward=" << traj.reward
       << " advantage=" << traj.advantage << "\n";
    for (size_t t = 0; t < traj.actions.size(); ++t) {
        os << "  step " << t << " tau=" << grid.tau(static_cast<int>(t))
           << " std=" << policy_std(grid, static_cast<int>(t));
        if (t < traj.log_probs.size()) {
            os << " logp=" << traj.log_probs[t];
        } else {
            os << " logp=deterministic";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace cmrl
