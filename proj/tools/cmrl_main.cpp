// Command-line front end: pretraining, fine-tuning, the horizon ablation,
// time-budget evaluation, and figure rendering.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmrl/experiments.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string arm;
    std::string task;
    int64_t seed = -1;
    int horizon = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Path to a JSON experiment config");
    cmd->add_option("--out", flags.out_dir, "Output directory (overrides config)");
    cmd->add_option("--arm", flags.arm, "Arm to run: rlcm or ddpo")
        ->check(CLI::IsMember({"rlcm", "ddpo"}));
    cmd->add_option("--task", flags.task, "Reward task")
        ->check(CLI::IsMember({"target2d", "compress", "incompress", "blackbox"}));
    cmd->add_option("--seed", flags.seed, "Run a single seed instead of the config's list");
    cmd->add_option("--horizon", flags.horizon, "Sampler horizon H");
}

cmrl::ExperimentConfig resolve_config(const CommonFlags& flags) {
    cmrl::ExperimentConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = cmrl::load_config(flags.config_path);
    }
    if (!flags.out_dir.empty()) {
        cfg.out_dir = flags.out_dir;
    }
    if (!flags.arm.empty()) {
        cfg.arm = flags.arm;
    }
    if (!flags.task.empty()) {
        cfg.task = flags.task;
    }
    if (flags.seed >= 0) {
        cfg.seeds = {static_cast<uint64_t>(flags.seed)};
    }
    if (flags.horizon > 0) {
        cfg.horizon = flags.horizon;
    }
    // image tasks need the image dataset
    if ((cfg.task == "compress" || cfg.task == "incompress") && cfg.dataset == "mixture2d") {
        cfg.dataset = "patterns8";
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale lab for reward fine-tuning of fast generative samplers"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::vector<int> h_list;
    std::vector<double> budgets;
    std::vector<std::string> metrics_files;
    std::string plot_out = ".";

    CLI::App* pretrain = app.add_subcommand("pretrain", "Train the base generative model");
    add_common_flags(pretrain, flags);

    CLI::App* finetune =
        app.add_subcommand("finetune", "Reward fine-tuning from a pretrain checkpoint");
    add_common_flags(finetune, flags);

    CLI::App* ablate = app.add_subcommand("ablate-horizon", "Fine-tune and evaluate at several horizons");
    add_common_flags(ablate, flags);
    ablate->add_option("--horizons", h_list, "Horizons to sweep (default 2 4 8)");

    CLI::App* budget = app.add_subcommand("eval-time-budget",
                                          "Mean reward of completed trajectories per time budget");
    add_common_flags(budget, flags);
    budget->add_option("--budgets", budgets, "Time budgets in cpu seconds (default: derived)");

    CLI::App* plot = app.add_subcommand("plot", "Render SVG figures from metrics CSVs");
    plot->add_option("files", metrics_files, "Metrics CSV files")->required();
    plot->add_option("--out", plot_out, "Output directory for figures");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) {
            cmrl::ExperimentConfig cfg = resolve_config(flags);
            std::string path = cmrl::cmd_pretrain(cfg);
            std::printf("wrote %s\n", path.c_str());
        } else if (finetune->parsed()) {
            cmrl::ExperimentConfig cfg = resolve_config(flags);
            int steps = cfg.arm == "rlcm" ? cfg.horizon - 1 : cfg.ddpo_horizon;
            std::printf("arm=%s stochastic policy steps per trajectory: %d\n", cfg.arm.c_str(),
                        steps);
            for (const std::string& path : cmrl::cmd_finetune(cfg)) {
                std::printf("wrote %s\n", path.c_str());
            }
        } else if (ablate->parsed()) {
            cmrl::ExperimentConfig cfg = resolve_config(flags);
            auto rows = cmrl::cmd_ablate_horizon(cfg, h_list);
            for (const auto& row : rows) {
                std::printf("H=%d seed=%llu final_reward=%.6g infer_s=%.6g\n", row.horizon,
                            static_cast<unsigned long long>(row.seed), row.final_reward,
                            row.infer_seconds_per_traj);
            }
        } else if (budget->parsed()) {
            cmrl::ExperimentConfig cfg = resolve_config(flags);
            auto rows = cmrl::cmd_eval_time_budget(cfg, budgets);
            for (const auto& row : rows) {
                if (row.completed > 0) {
                    std::printf("%s seed=%llu budget=%.4gs completed=%d mean_reward=%.6g\n",
                                row.arm.c_str(), static_cast<unsigned long long>(row.seed),
                                row.budget_seconds, row.completed, row.mean_reward);
                } else {
                    std::printf("%s seed=%llu budget=%.4gs completed=0 (missing point)\n",
                                row.arm.c_str(), static_cast<unsigned long long>(row.seed),
                                row.budget_seconds);
                }
            }
        } else if (plot->parsed()) {
            cmrl::cmd_plot(metrics_files, plot_out);
            std::printf("wrote figures to %s\n", plot_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
