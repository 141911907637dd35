#include "cmrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "cmrl/checkpoint.hpp"
#include "cmrl/error.hpp"
#include "cmrl/svg_plot.hpp"

namespace cmrl {

namespace fs = std::filesystem;

std::string pretrain_checkpoint_path(const ExperimentConfig& cfg, const std::string& arm) {
    return cfg.out_dir + "/pretrain_" + cfg.dataset + "_" + arm + ".ckpt";
}

std::string finetune_checkpoint_path(const ExperimentConfig& cfg, const std::string& arm,
                                     uint64_t seed) {
    return cfg.out_dir + "/finetune_" + cfg.task + "_" + arm + "_seed" + std::to_string(seed) +
           ".ckpt";
}

std::string metrics_csv_path(const ExperimentConfig& cfg, const std::string& arm, uint64_t seed) {
    return cfg.out_dir + "/metrics_" + cfg.task + "_" + arm + "_seed" + std::to_string(seed) +
           ".csv";
}

static void write_loss_csv(const std::string& path, const std::vector<double>& losses,
                           int log_every) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open loss file for writing: " + path);
    out << "iteration,loss\n";
    char buf[48];
    for (size_t i = 0; i < losses.size(); i += static_cast<size_t>(log_every)) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, losses[i]);
        out << buf;
    }
}

static std::vector<int> all_contexts(const Dataset& dataset) {
    std::vector<int> contexts(static_cast<size_t>(dataset.vocab()));
    for (int c = 0; c < dataset.vocab(); ++c) {
        contexts[static_cast<size_t>(c)] = c;
    }
    return contexts;
}

std::string cmd_pretrain(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    write_resolved_config(cfg, cfg.out_dir + "/config_resolved.json");
    auto dataset = make_dataset(cfg.dataset);
    uint64_t seed = cfg.seeds.front();
    std::string path = pretrain_checkpoint_path(cfg, cfg.arm);
    if (cfg.arm == "rlcm") {
        Rng init_rng(mix64(seed ^ 0xc0115e11ULL));
        ConsistencyModel model =
            ConsistencyModel::create(dataset->dim(), dataset->vocab(), cfg.hidden, init_rng, cfg.T,
                                     cfg.eps, cfg.sigma_data, cfg.time_features, cfg.context_embed);
        Rng train_rng(seed);
        PretrainResult result = ct_pretrain(model, *dataset, cfg.pretrain, train_rng);
        save_checkpoint(path, checkpoint_of(model));
        write_loss_csv(cfg.out_dir + "/pretrain_" + cfg.dataset + "_rlcm_loss.csv",
                       result.loss_history, cfg.pretrain_log_every);
    } else {
        Rng init_rng(mix64(seed ^ 0x5c05e11ULL));
        ScoreModel model =
            ScoreModel::create(dataset->dim(), dataset->vocab(), cfg.hidden, cfg.ddpo_horizon,
                               init_rng, cfg.T, cfg.eps, cfg.sigma_data, cfg.time_features,
                               cfg.context_embed);
        Rng train_rng(seed);
        PretrainResult result = dsm_pretrain(model, *dataset, cfg.dsm, train_rng);
        save_checkpoint(path, checkpoint_of(model));
        write_loss_csv(cfg.out_dir + "/pretrain_" + cfg.dataset + "_ddpo_loss.csv",
                       result.loss_history, cfg.pretrain_log_every);
    }
    return path;
}

std::vector<std::string> cmd_finetune(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    write_resolved_config(cfg, cfg.out_dir + "/config_resolved.json");
    std::string pretrain_path = pretrain_checkpoint_path(cfg, cfg.arm);
    if (!fs::exists(pretrain_path)) {
        throw ContractError("pretrain checkpoint not found: " + pretrain_path +
                            " (run the pretrain command first)");
    }
    Checkpoint base = load_checkpoint(pretrain_path);
    auto dataset = make_dataset(cfg.dataset);
    std::vector<int> contexts = all_contexts(*dataset);
    std::vector<std::string> metric_paths;

    for (uint64_t seed : cfg.seeds) {
        QueryCounter reward(make_task_reward(cfg.task, *dataset, cfg.scorer_seed));
        std::string ckpt_path = finetune_checkpoint_path(cfg, cfg.arm, seed);
        std::vector<MetricsRow> history;
        if (cfg.arm == "rlcm") {
            ConsistencyModel model = consistency_from_checkpoint(base);
            TimeGrid grid = karras_grid(cfg.horizon, model.eps, model.T, cfg.rho);
            TrainHooks hooks;
            hooks.on_epoch = [&](const ConsistencyModel& m, const MetricsRow&) {
                save_checkpoint(ckpt_path, checkpoint_of(m));
            };
            history = train_rlcm(model, grid, contexts, reward, cfg.train, seed, hooks);
            save_checkpoint(ckpt_path, checkpoint_of(model));
        } else {
            ScoreModel model = score_from_checkpoint(base);
            history = train_ddpo(model, contexts, reward, cfg.train, seed);
            save_checkpoint(ckpt_path, checkpoint_of(model));
        }
        std::string mpath = metrics_csv_path(cfg, cfg.arm, seed);
        write_metrics_csv(mpath, history);
        metric_paths.push_back(mpath);
    }
    return metric_paths;
}

std::vector<AblationRow> cmd_ablate_horizon(const ExperimentConfig& cfg,
                                            const std::vector<int>& h_list_in) {
    cfg.validate();
    std::vector<int> h_list = h_list_in.empty() ? std::vector<int>{2, 4, 8} : h_list_in;
    fs::create_directories(cfg.out_dir);
    write_resolved_config(cfg, cfg.out_dir + "/config_resolved.json");
    std::string pretrain_path = pretrain_checkpoint_path(cfg, "rlcm");
    if (!fs::exists(pretrain_path)) {
        throw ContractError("pretrain checkpoint not found: " + pretrain_path);
    }
    Checkpoint base = load_checkpoint(pretrain_path);
    auto dataset = make_dataset(cfg.dataset);
    std::vector<int> contexts = all_contexts(*dataset);

    std::vector<AblationRow> rows;
    for (int h : h_list) {
        for (uint64_t seed : cfg.seeds) {
            ConsistencyModel model = consistency_from_checkpoint(base);
            TimeGrid grid = karras_grid(h, model.eps, model.T, cfg.rho);
            QueryCounter reward(make_task_reward(cfg.task, *dataset, cfg.scorer_seed));
            std::vector<MetricsRow> history =
                train_rlcm(model, grid, contexts, reward, cfg.train, seed);
            write_metrics_csv(cfg.out_dir + "/metrics_" + cfg.task + "_rlcm_H" +
                                  std::to_string(h) + "_seed" + std::to_string(seed) + ".csv",
                              history);
            EvalResult eval = evaluate_policy(model, grid, contexts, reward.inner(),
                                              cfg.eval_trajectories, seed ^ 0xe7a1ULL);
            AblationRow row;
            row.horizon = h;
            row.seed = seed;
            row.final_reward = eval.mean_reward;
            row.infer_seconds_per_traj = eval.mean_traj_cpu_seconds;
            rows.push_back(row);
        }
    }

    std::string csv_path = cfg.out_dir + "/ablation_" + cfg.task + ".csv";
    {
        std::ofstream out(csv_path, std::ios::trunc);
        require(out.good(), "cannot write " + csv_path);
        out << "horizon,seed,final_reward,infer_seconds_per_traj\n";
        char buf[96];
        for (const AblationRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%.17g\n", r.horizon,
                          static_cast<unsigned long long>(r.seed), r.final_reward,
                          r.infer_seconds_per_traj);
            out << buf;
        }
    }

    // two panels: reward vs horizon, inference cost vs horizon
    PlotPanel reward_panel{"Final reward vs horizon", "horizon", "mean terminal reward", {}};
    PlotPanel time_panel{"Inference cost vs horizon", "horizon", "seconds per sample", {}};
    PlotSeries rs{"reward", {}, {}, {}};
    PlotSeries ts{"cpu s/sample", {}, {}, {}};
    for (int h : h_list) {
        std::vector<double> rewards;
        std::vector<double> secs;
        for (const AblationRow& r : rows) {
            if (r.horizon == h) {
                rewards.push_back(r.final_reward);
                secs.push_back(r.infer_seconds_per_traj);
            }
        }
        double rm = 0.0, sm = 0.0;
        for (double v : rewards) rm += v;
        for (double v : secs) sm += v;
        rm /= static_cast<double>(rewards.size());
        sm /= static_cast<double>(secs.size());
        double rv = 0.0;
        for (double v : rewards) rv += (v - rm) * (v - rm);
        rs.x.push_back(h);
        rs.y.push_back(rm);
        rs.band.push_back(std::sqrt(rv / static_cast<double>(rewards.size())));
        ts.x.push_back(h);
        ts.y.push_back(sm);
    }
    reward_panel.series.push_back(rs);
    time_panel.series.push_back(ts);
    write_svg(cfg.out_dir + "/ablation_" + cfg.task + ".svg", {reward_panel, time_panel});
    return rows;
}

std::vector<BudgetRow> cmd_eval_time_budget(const ExperimentConfig& cfg,
                                            std::vector<double> budgets) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    write_resolved_config(cfg, cfg.out_dir + "/config_resolved.json");
    auto dataset = make_dataset(cfg.dataset);
    std::vector<int> contexts = all_contexts(*dataset);
    RewardFn reward = make_task_reward(cfg.task, *dataset, cfg.scorer_seed);

    struct Arm {
        std::string name;
        uint64_t seed;
        ConsistencyModel cm;
        bool is_rlcm;
        ScoreModel sm;
    };

    std::vector<BudgetRow> rows;
    PlotPanel panel{"Reward vs inference budget", "time budget (cpu s)", "mean reward", {}};
    std::map<std::string, PlotSeries> series;

    // derive default budgets from the baseline cost of the capped sample count
    if (budgets.empty()) {
        std::string path = finetune_checkpoint_path(cfg, "ddpo", cfg.seeds.front());
        if (!fs::exists(path)) {
            throw ContractError("fine-tuned checkpoint not found: " + path);
        }
        ScoreModel probe = score_from_checkpoint(load_checkpoint(path));
        EvalResult probe_eval = evaluate_ddpo(probe, contexts, reward, 10, 0x10d9e7ULL);
        double full = probe_eval.mean_traj_cpu_seconds * cfg.eval_trajectories;
        budgets = {0.05 * full, 0.125 * full, 0.25 * full, 0.5 * full, 1.0 * full};
    }

    for (const std::string& arm : {std::string("rlcm"), std::string("ddpo")}) {
        for (uint64_t seed : cfg.seeds) {
            std::string path = finetune_checkpoint_path(cfg, arm, seed);
            if (!fs::exists(path)) {
                throw ContractError("fine-tuned checkpoint not found: " + path +
                                    " (run the finetune command for both arms first)");
            }
            Checkpoint ckpt = load_checkpoint(path);
            for (double budget : budgets) {
                BudgetRow row;
                row.arm = arm;
                row.seed = seed;
                row.budget_seconds = budget;
                double spent = 0.0;
                double reward_sum = 0.0;
                Rng root(seed ^ 0xbd6e7ULL);
                if (arm == "rlcm") {
                    ConsistencyModel model = consistency_from_checkpoint(ckpt);
                    TimeGrid grid = karras_grid(cfg.horizon, model.eps, model.T, cfg.rho);
                    for (int i = 0; i < cfg.eval_trajectories; ++i) {
                        Rng stream = root.derive(static_cast<uint64_t>(i));
                        int c = contexts[static_cast<size_t>(
                            stream.uniform_int(static_cast<int>(contexts.size())))];
                        double t0 = cpu_seconds();
                        Tensor sample = multistep_sample(model, grid, c, stream);
                        double dt = cpu_seconds() - t0;
                        if (spent + dt > budget) {
                            break;
                        }
                        spent += dt;
                        reward_sum += reward(sample, c);
                        row.completed += 1;
                    }
                } else {
                    ScoreModel model = score_from_checkpoint(ckpt);
                    for (int i = 0; i < cfg.eval_trajectories; ++i) {
                        Rng stream = root.derive(static_cast<uint64_t>(i));
                        int c = contexts[static_cast<size_t>(
                            stream.uniform_int(static_cast<int>(contexts.size())))];
                        double t0 = cpu_seconds();
                        DiffusionTrajectory traj = ddpo_rollout(model, c, stream);
                        double dt = cpu_seconds() - t0;
                        if (spent + dt > budget) {
                            break;
                        }
                        spent += dt;
                        reward_sum += reward(traj.terminal, c);
                        row.completed += 1;
                    }
                }
                row.mean_reward = row.completed > 0
                                      ? reward_sum / static_cast<double>(row.completed)
                                      : std::numeric_limits<double>::quiet_NaN();
                rows.push_back(row);
            }
        }
    }

    std::string csv_path = cfg.out_dir + "/time_budget_" + cfg.task + ".csv";
    {
        std::ofstream out(csv_path, std::ios::trunc);
        require(out.good(), "cannot write " + csv_path);
        out << "arm,seed,budget_seconds,completed,mean_reward\n";
        char buf[128];
        for (const BudgetRow& r : rows) {
            if (r.completed > 0) {
                std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%d,%.17g\n", r.arm.c_str(),
                              static_cast<unsigned long long>(r.seed), r.budget_seconds,
                              r.completed, r.mean_reward);
            } else {
                // missing point: no completed trajectory at this budget
                std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,0,\n", r.arm.c_str(),
                              static_cast<unsigned long long>(r.seed), r.budget_seconds);
            }
            out << buf;
        }
    }

    for (const std::string& arm : {std::string("rlcm"), std::string("ddpo")}) {
        PlotSeries s{arm, {}, {}, {}};
        for (double budget : budgets) {
            std::vector<double> vals;
            for (const BudgetRow& r : rows) {
                if (r.arm == arm && r.budget_seconds == budget && r.completed > 0) {
                    vals.push_back(r.mean_reward);
                }
            }
            if (vals.empty()) {
                continue;
            }
            double m = 0.0;
            for (double v : vals) m += v;
            m /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - m) * (v - m);
            s.x.push_back(budget);
            s.y.push_back(m);
            s.band.push_back(std::sqrt(var / static_cast<double>(vals.size())));
        }
        if (!s.x.empty()) {
            panel.series.push_back(s);
        }
    }
    require(!panel.series.empty(), "time budget evaluation produced no completed points");
    write_svg(cfg.out_dir + "/time_budget_" + cfg.task + ".svg", {panel});
    return rows;
}

// "metrics_compress_rlcm_seed3.csv" -> "metrics_compress_rlcm"
static std::string series_key(const std::string& path) {
    std::string stem = fs::path(path).stem().string();
    size_t pos = stem.rfind("_seed");
    return pos == std::string::npos ? stem : stem.substr(0, pos);
}

PlotSeries aggregate_metric_series(const std::vector<std::vector<MetricsRow>>& runs,
                                   bool x_is_queries, const std::string& label) {
    require(!runs.empty(), "aggregate: no runs");
    size_t min_len = runs.front().size();
    for (const auto& run : runs) {
        min_len = std::min(min_len, run.size());
    }
    require(min_len >= 1, "aggregate: run with no rows");
    PlotSeries s{label, {}, {}, {}};
    for (size_t i = 0; i < min_len; ++i) {
        double m = 0.0;
        double x = 0.0;
        for (const auto& run : runs) {
            m += run[i].reward_mean;
            x += x_is_queries ? static_cast<double>(run[i].reward_queries) : run[i].cpu_seconds;
        }
        m /= static_cast<double>(runs.size());
        x /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& run : runs) {
            var += (run[i].reward_mean - m) * (run[i].reward_mean - m);
        }
        s.x.push_back(x);
        s.y.push_back(m);
        s.band.push_back(std::sqrt(var / static_cast<double>(runs.size())));
    }
    return s;
}

void cmd_plot(const std::vector<std::string>& metrics_files, const std::string& out_dir) {
    require(!metrics_files.empty(), "plot: no metrics files given");
    fs::create_directories(out_dir);
    std::map<std::string, std::vector<std::vector<MetricsRow>>> groups;
    for (const std::string& path : metrics_files) {
        std::vector<MetricsRow> rows = read_metrics_csv(path);
        require(!rows.empty(), "plot: metrics file has no rows: " + path);
        groups[series_key(path)].push_back(std::move(rows));
    }

    PlotPanel queries_panel{"Reward vs reward queries", "reward queries", "mean reward", {}};
    PlotPanel time_panel{"Reward vs training time", "cpu seconds", "mean reward", {}};
    for (const auto& [key, runs] : groups) {
        queries_panel.series.push_back(aggregate_metric_series(runs, true, key));
        time_panel.series.push_back(aggregate_metric_series(runs, false, key));
    }
    write_svg(out_dir + "/reward_vs_queries.svg", {queries_panel});
    write_svg(out_dir + "/reward_vs_time.svg", {time_panel});
}

}  // namespace cmrl
