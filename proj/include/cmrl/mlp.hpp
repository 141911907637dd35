#ifndef CMRL_MLP_HPP
#define CMRL_MLP_HPP

#include <vector>

#include "cmrl/autograd.hpp"
#include "cmrl/params.hpp"
#include "cmrl/rng.hpp"
#include "cmrl/tensor.hpp"

namespace cmrl {

/// Feed-forward net: input -> hidden layers with tanh -> linear output.
/// Parameters live in a ParamStore under "layer<i>.weight" / "layer<i>.bias";
/// an empty hidden list gives a single linear layer.
struct MlpSpec {
    int64_t in_dim = 0;
    std::vector<int64_t> hidden;
    int64_t out_dim = 0;

    int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
void mlp_init(ParamStore& store, const MlpSpec& spec, Rng& rng);

/// Forward pass over the concatenation [x ; t_embed ; c_embed]. Empty
/// (default-constructed) embedding tensors are skipped. The combined width
/// must match layer 0; a mismatch raises a DimensionError naming the layer.
Tensor mlp_forward(const ParamStore& store, const MlpSpec& spec, const Tensor& x,
                   const Tensor& t_embed = Tensor(), const Tensor& c_embed = Tensor());

/// Tape-recorded forward; embeddings given as tape nodes (0 = absent is not
/// allowed here, pass only the nodes that exist).
ValueId mlp_forward_taped(Tape& tape, ParamStore& store, const MlpSpec& spec,
                          const std::vector<ValueId>& input_parts);

/// Sinusoidal features of log(t): [sin(w_k log t), cos(w_k log t)] with
/// octave-spaced frequencies, n_features total (must be even).
Tensor time_features(double t, int n_features);

}  // namespace cmrl

#endif
