#ifndef CMRL_TIME_GRID_HPP
#define CMRL_TIME_GRID_HPP

#include <vector>

namespace cmrl {

/// Horizon partition T = tau_0 > tau_1 > ... > tau_H = eps shared by the
/// multistep sampler and the decision-process view of it.
struct TimeGrid {
    int horizon = 0;
    double rho = 7.0;
    std::vector<double> points;  // horizon + 1 entries, strictly decreasing

    double T() const { return points.front(); }
    double eps() const { return points.back(); }
    double tau(int i) const { return points[static_cast<size_t>(i)]; }
};

/// tau_i = (T^(1/rho) + (i/H) * (eps^(1/rho) - T^(1/rho)))^rho, endpoints
/// pinned exactly to T and eps.
TimeGrid karras_grid(int horizon, double eps, double T, double rho = 7.0);

}  // namespace cmrl

#endif
