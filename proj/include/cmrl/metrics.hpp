#ifndef CMRL_METRICS_HPP
#define CMRL_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cmrl {

/// One training-epoch record; the same schema for both fine-tuning arms so
/// cross-arm plots read a single format.
struct MetricsRow {
    int64_t epoch = 0;
    uint64_t reward_queries = 0;
    double cpu_seconds = 0.0;  // timing column, exempt from reproducibility
    double reward_mean = 0.0;
    double reward_std = 0.0;
    double surrogate_loss = 0.0;
    double grad_norm = 0.0;
    double clip_fraction = 0.0;
    uint64_t seed = 0;
};

extern const char* const kMetricsHeader;

std::string format_metrics_row(const MetricsRow& row);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
void append_metrics_row(const std::string& path, const MetricsRow& row, bool write_header);

/// Parses a metrics CSV; malformed rows raise a ContractError naming the
/// 1-based line number.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Process CPU time in seconds (all threads).
double cpu_seconds();
/// Monotonic wall-clock seconds.
double wall_seconds();

}  // namespace cmrl

#endif
