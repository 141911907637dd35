#include "cmrl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

static const char* kMagic = "cmrl-checkpoint";
static const int kVersion = 1;

double Checkpoint::hyper_f(const std::string& key) const {
    auto it = hyper.find(key);
    if (it == hyper.end()) {
        throw CheckpointError("checkpoint: missing hyperparameter " + key);
    }
    return std::stod(it->second);
}

int64_t Checkpoint::hyper_i(const std::string& key) const {
    auto it = hyper.find(key);
    if (it == hyper.end()) {
        throw CheckpointError("checkpoint: missing hyperparameter " + key);
    }
    return std::stoll(it->second);
}

std::vector<int64_t> Checkpoint::hyper_ints(const std::string& key) const {
    auto it = hyper.find(key);
    if (it == hyper.end()) {
        throw CheckpointError("checkpoint: missing hyperparameter " + key);
    }
    std::istringstream ss(it->second);
    std::vector<int64_t> out;
    int64_t v;
    while (ss >> v) {
        out.push_back(v);
    }
    return out;
}

static std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    require(ckpt.tensor_names.size() == ckpt.tensors.size(), "save_checkpoint: name/tensor count mismatch");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.good()) {
        throw CheckpointError("cannot open checkpoint for writing: " + path);
    }
    out << kMagic << " " << ckpt.version << "\n";
    out << "kind " << ckpt.kind << "\n";
    for (const auto& [key, value] : ckpt.hyper) {
        out << "hp " << key << " " << value << "\n";
    }
    for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
        out << "tensor " << ckpt.tensor_names[i];
        for (int64_t d : ckpt.tensors[i].shape) {
            out << " " << d;
        }
        out << "\n";
    }
    out << "payload\n";
    for (const Tensor& t : ckpt.tensors) {
        for (double v : t.data) {
            float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof(float));
        }
    }
    if (!out.good()) {
        throw CheckpointError("write failure on checkpoint: " + path);
    }
}

static Checkpoint parse_manifest(std::istream& in, const std::string& path) {
    Checkpoint ckpt;
    std::string line;
    if (!std::getline(in, line)) {
        throw CheckpointError(path + ": empty checkpoint");
    }
    {
        std::istringstream ss(line);
        std::string magic;
        int version = -1;
        ss >> magic >> version;
        if (magic != kMagic) {
            throw CheckpointError(path + ": not a checkpoint file");
        }
        if (version != kVersion) {
            throw CheckpointVersionError(path + ": unsupported checkpoint version " +
                                         std::to_string(version) + " (expected " +
                                         std::to_string(kVersion) + ")");
        }
        ckpt.version = version;
    }
    bool saw_payload = false;
    while (std::getline(in, line)) {
        if (line == "payload") {
            saw_payload = true;
            break;
        }
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "kind") {
            ss >> ckpt.kind;
        } else if (tag == "hp") {
            std::string key;
            ss >> key;
            std::string rest;
            std::getline(ss, rest);
            if (!rest.empty() && rest.front() == ' ') {
                rest.erase(rest.begin());
            }
            ckpt.hyper[key] = rest;
        } else if (tag == "tensor") {
            std::string name;
            ss >> name;
            std::vector<int64_t> shape;
            int64_t d;
            while (ss >> d) {
                shape.push_back(d);
            }
            if (shape.empty()) {
                throw CheckpointShapeError(path + ": tensor " + name + " has no shape");
            }
            ckpt.tensor_names.push_back(name);
            ckpt.tensor_shapes.push_back(std::move(shape));
        } else {
            throw CheckpointError(path + ": unknown manifest line: " + line);
        }
    }
    if (!saw_payload) {
        throw CheckpointError(path + ": manifest missing payload marker");
    }
    return ckpt;
}

Checkpoint read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        throw CheckpointError("cannot open checkpoint: " + path);
    }
    return parse_manifest(in, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        throw CheckpointError("cannot open checkpoint: " + path);
    }
    Checkpoint ckpt = parse_manifest(in, path);
    ckpt.tensors.reserve(ckpt.tensor_names.size());
    for (size_t i = 0; i < ckpt.tensor_names.size(); ++i) {
        int64_t n = 1;
        for (int64_t d : ckpt.tensor_shapes[i]) {
            n *= d;
        }
        Tensor t = Tensor::zeros(ckpt.tensor_shapes[i]);
        for (int64_t j = 0; j < n; ++j) {
            float f = 0.0f;
            in.read(reinterpret_cast<char*>(&f), sizeof(float));
            if (!in.good()) {
                throw CheckpointTruncatedError(path + ": truncated payload in tensor " +
                                               ckpt.tensor_names[i]);
            }
            t[j] = static_cast<double>(f);
        }
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

static void pack_params(Checkpoint& ckpt, const ParamStore& params) {
    for (size_t i = 0; i < params.size(); ++i) {
        ckpt.tensor_names.push_back(params.entry(i).name);
        ckpt.tensor_shapes.push_back(params.entry(i).value.shape);
        ckpt.tensors.push_back(params.entry(i).value);
    }
}

static std::string ints_str(const std::vector<int64_t>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        os << (i ? " " : "") << v[i];
    }
    return os.str();
}

Checkpoint checkpoint_of(const ConsistencyModel& model) {
    Checkpoint ckpt;
    ckpt.kind = "consistency";
    ckpt.hyper["T"] = fmt_double(model.T);
    ckpt.hyper["eps"] = fmt_double(model.eps);
    ckpt.hyper["sigma_data"] = fmt_double(model.sigma_data);
    ckpt.hyper["vocab"] = std::to_string(model.vocab);
    ckpt.hyper["data_dim"] = std::to_string(model.data_dim);
    ckpt.hyper["hidden"] = ints_str(model.hidden);
    ckpt.hyper["time_features"] = std::to_string(model.time_feature_dim);
    ckpt.hyper["context_embed"] = std::to_string(model.context_embed_dim);
    pack_params(ckpt, model.params);
    return ckpt;
}

Checkpoint checkpoint_of(const ScoreModel& model) {
    Checkpoint ckpt;
    ckpt.kind = "score";
    ckpt.hyper["T"] = fmt_double(model.sigma_grid.front());
    ckpt.hyper["eps"] = fmt_double(model.sigma_grid.back());
    ckpt.hyper["horizon"] = std::to_string(model.horizon());
    ckpt.hyper["sigma_data"] = fmt_double(model.sigma_data);
    ckpt.hyper["vocab"] = std::to_string(model.vocab);
    ckpt.hyper["data_dim"] = std::to_string(model.data_dim);
    ckpt.hyper["hidden"] = ints_str(model.hidden);
    ckpt.hyper["time_features"] = std::to_string(model.time_feature_dim);
    ckpt.hyper["context_embed"] = std::to_string(model.context_embed_dim);
    pack_params(ckpt, model.params);
    return ckpt;
}

static void restore_params(ParamStore& params, const Checkpoint& ckpt) {
    if (ckpt.tensors.size() != params.size()) {
        throw CheckpointShapeError("checkpoint: expected " + std::to_string(params.size()) +
                                   " tensors, found " + std::to_string(ckpt.tensors.size()));
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (ckpt.tensor_names[i] != params.entry(i).name) {
            throw CheckpointShapeError("checkpoint: tensor " + ckpt.tensor_names[i] +
                                       " does not match expected " + params.entry(i).name);
        }
        if (ckpt.tensors[i].shape != params.entry(i).value.shape) {
            throw CheckpointShapeError("checkpoint: shape mismatch for tensor " +
                                       ckpt.tensor_names[i]);
        }
        params.entry(i).value = ckpt.tensors[i];
    }
}

ConsistencyModel consistency_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "consistency") {
        throw CheckpointError("checkpoint kind is '" + ckpt.kind + "', expected 'consistency'");
    }
    Rng dummy(0);
    ConsistencyModel model = ConsistencyModel::create(
        ckpt.hyper_i("data_dim"), static_cast<int>(ckpt.hyper_i("vocab")),
        ckpt.hyper_ints("hidden"), dummy, ckpt.hyper_f("T"), ckpt.hyper_f("eps"),
        ckpt.hyper_f("sigma_data"), static_cast<int>(ckpt.hyper_i("time_features")),
        static_cast<int>(ckpt.hyper_i("context_embed")));
    restore_params(model.params, ckpt);
    return model;
}

ScoreModel score_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "score") {
        throw CheckpointError("checkpoint kind is '" + ckpt.kind + "', expected 'score'");
    }
    Rng dummy(0);
    ScoreModel model = ScoreModel::create(
        ckpt.hyper_i("data_dim"), static_cast<int>(ckpt.hyper_i("vocab")),
        ckpt.hyper_ints("hidden"), static_cast<int>(ckpt.hyper_i("horizon")), dummy,
        ckpt.hyper_f("T"), ckpt.hyper_f("eps"), ckpt.hyper_f("sigma_data"),
        static_cast<int>(ckpt.hyper_i("time_features")),
        static_cast<int>(ckpt.hyper_i("context_embed")));
    restore_params(model.params, ckpt);
    return model;
}

}  // namespace cmrl
