#include "cmrl/metrics.hpp"

#include <time.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

const char* const kMetricsHeader =
    "epoch,reward_queries,cpu_seconds,reward_mean,reward_std,surrogate_loss,grad_norm,"
    "clip_fraction,seed";

static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_metrics_row(const MetricsRow& row) {
    std::ostringstream os;
    os << row.epoch << ',' << row.reward_queries << ',' << fmt(row.cpu_seconds) << ','
       << fmt(row.reward_mean) << ',' << fmt(row.reward_std) << ',' << fmt(row.surrogate_loss)
       << ',' << fmt(row.grad_norm) << ',' << fmt(row.clip_fraction) << ',' << row.seed;
    return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open metrics file for writing: " + path);
    out << kMetricsHeader << "\n";
    for (const MetricsRow& row : rows) {
        out << format_metrics_row(row) << "\n";
    }
}

void append_metrics_row(const std::string& path, const MetricsRow& row, bool write_header) {
    std::ofstream out(path, write_header ? std::ios::trunc : std::ios::app);
    require(out.good(), "cannot open metrics file for writing: " + path);
    if (write_header) {
        out << kMetricsHeader << "\n";
    }
    out << format_metrics_row(row) << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open metrics file: " + path);
    std::string line;
    int lineno = 0;
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (lineno == 1) {
            require(line == kMetricsHeader,
                    path + ":1: unexpected metrics header");
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 9) {
            throw ContractError(path + ":" + std::to_string(lineno) + ": expected 9 fields, got " +
                                std::to_string(fields.size()));
        }
        try {
            MetricsRow row;
            row.epoch = std::stoll(fields[0]);
            row.reward_queries = std::stoull(fields[1]);
            row.cpu_seconds = std::stod(fields[2]);
            row.reward_mean = std::stod(fields[3]);
            row.reward_std = std::stod(fields[4]);
            row.surrogate_loss = std::stod(fields[5]);
            row.grad_norm = std::stod(fields[6]);
            row.clip_fraction = std::stod(fields[7]);
            row.seed = std::stoull(fields[8]);
            rows.push_back(row);
        } catch (const std::exception&) {
            throw ContractError(path + ":" + std::to_string(lineno) + ": malformed metrics row");
        }
    }
    return rows;
}

double cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

double wall_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

}  // namespace cmrl
