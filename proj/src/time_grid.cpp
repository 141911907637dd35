#include "cmrl/time_grid.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

TimeGrid karras_grid(int horizon, double eps, double T, double rho) {
    require(horizon >= 1, "karras_grid: horizon must be >= 1");
    require(eps > 0.0 && eps < T, "karras_grid: need 0 < eps < T");
    require(rho > 0.0, "karras_grid: rho must be positive");
    TimeGrid grid;
    grid.horizon = horizon;
    grid.rho = rho;
    grid.points.resize(static_cast<size_t>(horizon) + 1);
    double inv_rho = 1.0 / rho;
    double a = std::pow(T, inv_rho);
    double b = std::pow(eps, inv_rho);
    for (int i = 0; i <= horizon; ++i) {
        double frac = static_cast<double>(i) / static_cast<double>(horizon);
        grid.points[static_cast<size_t>(i)] = std::pow(a + frac * (b - a), rho);
    }
    grid.points.front() = T;
    grid.points.back() = eps;
    for (int i = 0; i < horizon; ++i) {
        require(grid.points[static_cast<size_t>(i)] > grid.points[static_cast<size_t>(i) + 1],
                "karras_grid: grid not strictly decreasing");
    }
    return grid;
}

}  // namespace cmrl
