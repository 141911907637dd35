#include "cmrl/normalize.hpp"

#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

ContextStats::ContextStats(int capacity, int min_count, int num_contexts)
    : capacity_(capacity), min_count_(min_count), buffers_(static_cast<size_t>(num_contexts)) {
    require(capacity >= 1, "context stats: capacity must be >= 1");
    require(min_count >= 1, "context stats: min_count must be >= 1");
    require(num_contexts >= 1, "context stats: need at least one context");
}

int ContextStats::count(int context) const {
    return static_cast<int>(buffers_[static_cast<size_t>(context)].size());
}

double ContextStats::mean(int context) const {
    const auto& buf = buffers_[static_cast<size_t>(context)];
    if (buf.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double v : buf) {
        s += v;
    }
    return s / static_cast<double>(buf.size());
}

double ContextStats::stddev(int context) const {
    const auto& buf = buffers_[static_cast<size_t>(context)];
    if (buf.empty()) {
        return 0.0;
    }
    double m = mean(context);
    double s = 0.0;
    for (double v : buf) {
        s += (v - m) * (v - m);
    }
    return std::sqrt(s / static_cast<double>(buf.size()));
}

double ContextStats::normalize(int context, double r, double a_max) {
    require(context >= 0 && context < static_cast<int>(buffers_.size()),
            "context stats: context out of range");
    require(std::isfinite(r), "context stats: reward must be finite");
    require(a_max > 0.0, "context stats: a_max must be positive");

    auto& buf = buffers_[static_cast<size_t>(context)];
    double advantage;
    if (buf.empty()) {
        // no history yet: nothing to compare against
        advantage = 0.0;
    } else if (static_cast<int>(buf.size()) < min_count_) {
        advantage = r - mean(context);
    } else {
        double sd = stddev(context);
        advantage = (r - mean(context)) / std::max(sd, 1e-6);
    }

    buf.push_back(r);
    while (static_cast<int>(buf.size()) > capacity_) {
        buf.pop_front();
    }

    return std::min(a_max, std::max(-a_max, advantage));
}

}  // namespace cmrl
