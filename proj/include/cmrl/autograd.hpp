#ifndef CMRL_AUTOGRAD_HPP
#define CMRL_AUTOGRAD_HPP

#include <cstdint>
#include <vector>

#include "cmrl/params.hpp"
#include "cmrl/tensor.hpp"

namespace cmrl {

using ValueId = uint32_t;

/// Define-by-run reverse-mode tape. Every op appends a node holding the
/// forward value plus the parent references needed for the backward sweep;
/// creation order is a topological order, so backward() is a single
/// reverse pass. Parameter leaves are bound to a ParamStore entry and
/// flush their accumulated gradient into the store.
///
/// A tape is single-use: backward() consumes it.
class Tape {
public:
    ValueId input(Tensor v);
    ValueId param(ParamStore& store, const std::string& name);

    // y = W * x for a (m x n) matrix node and length-n vector node
    ValueId matvec(ValueId w, ValueId x);
    ValueId add(ValueId a, ValueId b);
    ValueId sub(ValueId a, ValueId b);
    ValueId mul(ValueId a, ValueId b);
    ValueId scale(ValueId a, double k);
    // k * a + b, elementwise with scalar k, b
    ValueId affine(ValueId a, double k, double b);
    ValueId tanh_(ValueId a);
    ValueId exp_(ValueId a);
    ValueId sqrt_(ValueId a);
    ValueId sum_(ValueId a);
    ValueId concat_(const std::vector<ValueId>& parts);
    // clamp to [lo, hi]; gradient is zero outside the interval
    ValueId clamp_(ValueId a, double lo, double hi);
    // elementwise min; ties route gradient to `a`
    ValueId min2(ValueId a, ValueId b);
    // row r of a (rows x cols) matrix node
    ValueId row(ValueId matrix, int64_t r);

    const Tensor& value(ValueId id) const { return nodes_[id].val; }
    size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    /// Recomputes every node from the leaves and checks the recorded
    /// outputs are reproduced bitwise.
    bool replay_matches() const;

    friend void backward(Tape& tape, ValueId loss);

private:
    enum class Op : uint8_t {
        input,
        param,
        matvec,
        add,
        sub,
        mul,
        scale,
        affine,
        tanh_op,
        exp_op,
        sqrt_op,
        sum_op,
        concat_op,
        clamp_op,
        min2_op,
        row_op,
    };

    struct Node {
        Tensor val;
        Tensor grad;
        Op op;
        ValueId a = 0;
        ValueId b = 0;
        double p0 = 0.0;
        double p1 = 0.0;
        ParamStore* store = nullptr;
        int store_index = -1;
        std::vector<ValueId> parents;  // concat only
    };

    ValueId push(Node n);
    Tensor eval_node(const Node& n, const std::vector<Tensor>& vals) const;

    std::vector<Node> nodes_;
    std::vector<ParamStore*> stores_;
    bool consumed_ = false;
};

/// Reverse sweep from a scalar loss node. Gradients of every parameter
/// reachable from the loss are written into their ParamStore (grads of all
/// stores touched by the tape are zeroed first, so on return each gradient
/// equals d loss / d parameter). The tape is consumed.
void backward(Tape& tape, ValueId loss);

}  // namespace cmrl

#endif
