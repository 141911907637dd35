#ifndef CMRL_CONFIG_HPP
#define CMRL_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cmrl/consistency.hpp"
#include "cmrl/diffusion.hpp"
#include "cmrl/trainer.hpp"

namespace cmrl {

/// Everything one experiment needs, loadable from a JSON document. Unknown
/// keys are rejected on load; every run archives the fully-resolved config
/// next to its artifacts.
struct ExperimentConfig {
    std::string task = "target2d";  // target2d | compress | incompress | blackbox
    std::string arm = "rlcm";       // rlcm | ddpo
    std::string dataset = "mixture2d";
    std::string out_dir = "runs/out";
    std::vector<uint64_t> seeds = {1, 2, 3};
    uint64_t scorer_seed = 7;

    // sampler grid
    int horizon = 8;
    double rho = 7.0;
    double eps = 0.002;
    double T = 80.0;

    // network
    std::vector<int64_t> hidden = {64, 64};
    int time_features = 8;
    int context_embed = 8;
    double sigma_data = 0.5;

    CTConfig pretrain;
    int pretrain_log_every = 50;
    DsmConfig dsm;
    int ddpo_horizon = 50;

    TrainConfig train;

    int eval_trajectories = 100;
    std::vector<double> eval_budgets;  // seconds; empty = derived from measured cost

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text, const std::string& origin);
std::string resolved_config_json(const ExperimentConfig& cfg);
void write_resolved_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace cmrl

#endif
