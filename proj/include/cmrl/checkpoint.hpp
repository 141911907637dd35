#ifndef CMRL_CHECKPOINT_HPP
#define CMRL_CHECKPOINT_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmrl/consistency.hpp"
#include "cmrl/diffusion.hpp"
#include "cmrl/tensor.hpp"

namespace cmrl {

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};
struct CheckpointVersionError : CheckpointError {
    explicit CheckpointVersionError(const std::string& msg) : CheckpointError(msg) {}
};
struct CheckpointTruncatedError : CheckpointError {
    explicit CheckpointTruncatedError(const std::string& msg) : CheckpointError(msg) {}
};
struct CheckpointShapeError : CheckpointError {
    explicit CheckpointShapeError(const std::string& msg) : CheckpointError(msg) {}
};

/// On-disk model snapshot: a text manifest (version, kind, hyperparameters,
/// tensor shapes) followed by little-endian float32 tensor payloads in
/// manifest order. Values round-trip exactly at 32-bit precision.
struct Checkpoint {
    int version = 1;
    std::string kind;  // "consistency" | "score"
    std::map<std::string, std::string> hyper;
    std::vector<std::string> tensor_names;
    std::vector<std::vector<int64_t>> tensor_shapes;
    std::vector<Tensor> tensors;  // empty for manifest-only reads

    double hyper_f(const std::string& key) const;
    int64_t hyper_i(const std::string& key) const;
    std::vector<int64_t> hyper_ints(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
/// Parses the manifest only; tensor payloads are not read.
Checkpoint read_manifest(const std::string& path);

Checkpoint checkpoint_of(const ConsistencyModel& model);
Checkpoint checkpoint_of(const ScoreModel& model);
ConsistencyModel consistency_from_checkpoint(const Checkpoint& ckpt);
ScoreModel score_from_checkpoint(const Checkpoint& ckpt);

}  // namespace cmrl

#endif
