#ifndef CMRL_EXPERIMENTS_HPP
#define CMRL_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "cmrl/config.hpp"
#include "cmrl/metrics.hpp"
#include "cmrl/svg_plot.hpp"

namespace cmrl {

/// Mean reward +/- population std across seed runs of one configuration,
/// truncated to the shortest run; x is mean reward queries or mean cpu
/// seconds across the runs.
PlotSeries aggregate_metric_series(const std::vector<std::vector<MetricsRow>>& runs,
                                   bool x_is_queries, const std::string& label);

std::string pretrain_checkpoint_path(const ExperimentConfig& cfg, const std::string& arm);
std::string finetune_checkpoint_path(const ExperimentConfig& cfg, const std::string& arm,
                                     uint64_t seed);
std::string metrics_csv_path(const ExperimentConfig& cfg, const std::string& arm, uint64_t seed);

/// Trains the configured arm's base generative model and writes the
/// checkpoint, a pretraining loss CSV (one row per logging interval) and
/// the fully-resolved config. Returns the checkpoint path.
std::string cmd_pretrain(const ExperimentConfig& cfg);

/// Fine-tunes the pretrained model on the configured task for every seed;
/// one metrics CSV and one checkpoint per seed (the checkpoint is
/// refreshed after every epoch). Returns the metrics paths.
std::vector<std::string> cmd_finetune(const ExperimentConfig& cfg);

struct AblationRow {
    int horizon = 0;
    uint64_t seed = 0;
    double final_reward = 0.0;
    double infer_seconds_per_traj = 0.0;
};

/// Fine-tunes and evaluates at each horizon in h_list; writes
/// ablation_<task>.csv plus a two-panel figure (final reward vs horizon,
/// inference seconds vs horizon).
std::vector<AblationRow> cmd_ablate_horizon(const ExperimentConfig& cfg,
                                            const std::vector<int>& h_list);

struct BudgetRow {
    std::string arm;
    uint64_t seed = 0;
    double budget_seconds = 0.0;
    int completed = 0;
    double mean_reward = 0.0;  // NaN when no trajectory completed
};

/// For each time budget, generates as many trajectories as fit (capped at
/// eval.trajectories) per arm and reports the mean reward of completed
/// trajectories; points with zero completions are recorded as missing.
/// Budgets default to fractions of the measured baseline cost for 100
/// trajectories.
std::vector<BudgetRow> cmd_eval_time_budget(const ExperimentConfig& cfg,
                                            std::vector<double> budgets);

/// Renders reward-vs-queries and reward-vs-cpu-time figures (mean +/- std
/// across seeds) from metrics CSVs. Files sharing a name stem up to the
/// seed suffix are grouped as one series.
void cmd_plot(const std::vector<std::string>& metrics_files, const std::string& out_dir);

}  // namespace cmrl

#endif
