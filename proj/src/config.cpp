#include "cmrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cmrl/error.hpp"
#include "json.hpp"

namespace cmrl {

using nlohmann::json;

static void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end()) {
            throw ContractError("config: unknown key '" + where + it.key() + "'");
        }
    }
}

void ExperimentConfig::validate() const {
    require(task == "target2d" || task == "compress" || task == "incompress" || task == "blackbox",
            "config: unknown task '" + task + "'");
    require(arm == "rlcm" || arm == "ddpo", "config: arm must be 'rlcm' or 'ddpo'");
    require(dataset == "mixture2d" || dataset == "patterns8",
            "config: unknown dataset '" + dataset + "'");
    require(!seeds.empty(), "config: at least one seed required");
    require(horizon >= 1, "config: horizon must be >= 1");
    require(rho > 0.0, "config: rho must be positive");
    require(eps > 0.0 && eps < T, "config: need 0 < eps < T");
    require(!hidden.empty(), "config: at least one hidden layer");
    require(sigma_data > 0.0, "config: sigma_data must be positive");
    require(ddpo_horizon >= 1, "config: ddpo horizon must be >= 1");
    require(eval_trajectories >= 1, "config: eval trajectories must be >= 1");
    require(pretrain_log_every >= 1, "config: pretrain log_every must be >= 1");
    train.validate();
}

ExperimentConfig parse_config_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError(origin + ": " + e.what());
    }
    require(doc.is_object(), origin + ": top-level JSON object expected");

    ExperimentConfig cfg;
    reject_unknown(doc,
                   {"task", "arm", "dataset", "out_dir", "seeds", "scorer_seed", "grid", "model",
                    "pretrain", "dsm", "ddpo", "train", "eval"},
                   "");

    if (doc.contains("task")) cfg.task = doc["task"].get<std::string>();
    if (doc.contains("arm")) cfg.arm = doc["arm"].get<std::string>();
    if (doc.contains("dataset")) cfg.dataset = doc["dataset"].get<std::string>();
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("seeds")) cfg.seeds = doc["seeds"].get<std::vector<uint64_t>>();
    if (doc.contains("scorer_seed")) cfg.scorer_seed = doc["scorer_seed"].get<uint64_t>();

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        reject_unknown(g, {"horizon", "rho", "eps", "T"}, "grid.");
        if (g.contains("horizon")) cfg.horizon = g["horizon"].get<int>();
        if (g.contains("rho")) cfg.rho = g["rho"].get<double>();
        if (g.contains("eps")) cfg.eps = g["eps"].get<double>();
        if (g.contains("T")) cfg.T = g["T"].get<double>();
    }
    if (doc.contains("model")) {
        const json& m = doc["model"];
        reject_unknown(m, {"hidden", "time_features", "context_embed", "sigma_data"}, "model.");
        if (m.contains("hidden")) cfg.hidden = m["hidden"].get<std::vector<int64_t>>();
        if (m.contains("time_features")) cfg.time_features = m["time_features"].get<int>();
        if (m.contains("context_embed")) cfg.context_embed = m["context_embed"].get<int>();
        if (m.contains("sigma_data")) cfg.sigma_data = m["sigma_data"].get<double>();
    }
    if (doc.contains("pretrain")) {
        const json& p = doc["pretrain"];
        reject_unknown(p,
                       {"iterations", "batch_size", "lr", "ema_decay", "discretization", "metric",
                        "huber_c", "log_every"},
                       "pretrain.");
        if (p.contains("iterations")) cfg.pretrain.iterations = p["iterations"].get<int>();
        if (p.contains("batch_size")) cfg.pretrain.batch_size = p["batch_size"].get<int>();
        if (p.contains("lr")) cfg.pretrain.lr = p["lr"].get<double>();
        if (p.contains("ema_decay")) cfg.pretrain.ema_decay = p["ema_decay"].get<double>();
        if (p.contains("discretization"))
            cfg.pretrain.discretization = p["discretization"].get<int>();
        if (p.contains("huber_c")) cfg.pretrain.huber_c = p["huber_c"].get<double>();
        if (p.contains("log_every")) cfg.pretrain_log_every = p["log_every"].get<int>();
        if (p.contains("metric")) {
            std::string m = p["metric"].get<std::string>();
            require(m == "l2" || m == "pseudo_huber", "config: pretrain.metric must be 'l2' or 'pseudo_huber'");
            cfg.pretrain.metric = m == "l2" ? CTMetric::squared_l2 : CTMetric::pseudo_huber;
        }
    }
    if (doc.contains("dsm")) {
        const json& p = doc["dsm"];
        reject_unknown(p, {"iterations", "batch_size", "lr"}, "dsm.");
        if (p.contains("iterations")) cfg.dsm.iterations = p["iterations"].get<int>();
        if (p.contains("batch_size")) cfg.dsm.batch_size = p["batch_size"].get<int>();
        if (p.contains("lr")) cfg.dsm.lr = p["lr"].get<double>();
    }
    if (doc.contains("ddpo")) {
        const json& d = doc["ddpo"];
        reject_unknown(d, {"horizon"}, "ddpo.");
        if (d.contains("horizon")) cfg.ddpo_horizon = d["horizon"].get<int>();
    }
    if (doc.contains("train")) {
        const json& t = doc["train"];
        reject_unknown(t,
                       {"epochs", "batches_per_epoch", "sample_batch_size", "train_batch_size",
                        "inner_epochs", "lr", "clip_range", "adv_clip_max", "max_grad_norm",
                        "buffer_size", "min_count"},
                       "train.");
        if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
        if (t.contains("batches_per_epoch"))
            cfg.train.batches_per_epoch = t["batches_per_epoch"].get<int>();
        if (t.contains("sample_batch_size"))
            cfg.train.sample_batch_size = t["sample_batch_size"].get<int>();
        if (t.contains("train_batch_size"))
            cfg.train.train_batch_size = t["train_batch_size"].get<int>();
        if (t.contains("inner_epochs")) cfg.train.inner_epochs = t["inner_epochs"].get<int>();
        if (t.contains("lr")) cfg.train.lr = t["lr"].get<double>();
        if (t.contains("clip_range")) cfg.train.clip_range = t["clip_range"].get<double>();
        if (t.contains("adv_clip_max")) cfg.train.adv_clip_max = t["adv_clip_max"].get<double>();
        if (t.contains("max_grad_norm")) cfg.train.max_grad_norm = t["max_grad_norm"].get<double>();
        if (t.contains("buffer_size")) cfg.train.stats_buffer_size = t["buffer_size"].get<int>();
        if (t.contains("min_count")) cfg.train.stats_min_count = t["min_count"].get<int>();
    }
    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        reject_unknown(e, {"trajectories", "budgets"}, "eval.");
        if (e.contains("trajectories")) cfg.eval_trajectories = e["trajectories"].get<int>();
        if (e.contains("budgets")) cfg.eval_budgets = e["budgets"].get<std::vector<double>>();
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), path);
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    json doc;
    doc["task"] = cfg.task;
    doc["arm"] = cfg.arm;
    doc["dataset"] = cfg.dataset;
    doc["out_dir"] = cfg.out_dir;
    doc["seeds"] = cfg.seeds;
    doc["scorer_seed"] = cfg.scorer_seed;
    doc["grid"] = {{"horizon", cfg.horizon}, {"rho", cfg.rho}, {"eps", cfg.eps}, {"T", cfg.T}};
    doc["model"] = {{"hidden", cfg.hidden},
                    {"time_features", cfg.time_features},
                    {"context_embed", cfg.context_embed},
                    {"sigma_data", cfg.sigma_data}};
    doc["pretrain"] = {
        {"iterations", cfg.pretrain.iterations},
        {"batch_size", cfg.pretrain.batch_size},
        {"lr", cfg.pretrain.lr},
        {"ema_decay", cfg.pretrain.ema_decay},
        {"discretization", cfg.pretrain.discretization},
        {"metric", cfg.pretrain.metric == CTMetric::squared_l2 ? "l2" : "pseudo_huber"},
        {"huber_c", cfg.pretrain.huber_c},
        {"log_every", cfg.pretrain_log_every}};
    doc["dsm"] = {{"iterations", cfg.dsm.iterations},
                  {"batch_size", cfg.dsm.batch_size},
                  {"lr", cfg.dsm.lr}};
    doc["ddpo"] = {{"horizon", cfg.ddpo_horizon}};
    doc["train"] = {{"epochs", cfg.train.epochs},
                    {"batches_per_epoch", cfg.train.batches_per_epoch},
                    {"sample_batch_size", cfg.train.sample_batch_size},
                    {"train_batch_size", cfg.train.train_batch_size},
                    {"inner_epochs", cfg.train.inner_epochs},
                    {"lr", cfg.train.lr},
                    {"clip_range", cfg.train.clip_range},
                    {"adv_clip_max", cfg.train.adv_clip_max},
                    {"max_grad_norm", cfg.train.max_grad_norm},
                    {"buffer_size", cfg.train.stats_buffer_size},
                    {"min_count", cfg.train.stats_min_count}};
    doc["eval"] = {{"trajectories", cfg.eval_trajectories}, {"budgets", cfg.eval_budgets}};
    return doc.dump(2) + "\n";
}

void write_resolved_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot write resolved config: " + path);
    out << resolved_config_json(cfg);
}

}  // namespace cmrl
