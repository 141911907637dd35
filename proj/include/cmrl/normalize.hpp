#ifndef CMRL_NORMALIZE_HPP
#define CMRL_NORMALIZE_HPP

#include <deque>
#include <vector>

namespace cmrl {

/// Per-context rolling reward statistics. Each context keeps a FIFO buffer
/// of the most recent raw rewards; advantages are computed against the
/// buffer contents as they were before the incoming reward is pushed.
/// Until a context has seen min_count rewards the reward is only centered
/// (std treated as 1), so early epochs still produce usable advantages.
class ContextStats {
public:
    ContextStats(int capacity, int min_count, int num_contexts);

    /// Computes the clipped advantage for reward r under context c, then
    /// pushes r into c's buffer (evicting the oldest entry beyond
    /// capacity). Population std with a 1e-6 floor; the result is clipped
    /// to [-a_max, a_max].
    double normalize(int context, double r, double a_max);

    /// Buffer mean/population-std snapshot (for tests and metrics).
    int count(int context) const;
    double mean(int context) const;
    double stddev(int context) const;

    int capacity() const { return capacity_; }
    int min_count() const { return min_count_; }

private:
    int capacity_;
    int min_count_;
    std::vector<std::deque<double>> buffers_;
};

}  // namespace cmrl

#endif
