#include "cmrl/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "cmrl/error.hpp"

namespace cmrl {

ValueId Tape::push(Node n) {
    require(!consumed_, "tape already consumed by backward()");
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::input(Tensor v) {
    require(!v.empty(), "tape input: empty tensor");
    Node n;
    n.op = Op::input;
    n.val = std::move(v);
    return push(std::move(n));
}

ValueId Tape::param(ParamStore& store, const std::string& name) {
    int idx = store.index_of(name);
    require(idx >= 0, "tape param: unknown parameter " + name);
    Node n;
    n.op = Op::param;
    n.val = store.entry(static_cast<size_t>(idx)).value;
    n.store = &store;
    n.store_index = idx;
    if (std::find(stores_.begin(), stores_.end(), &store) == stores_.end()) {
        stores_.push_back(&store);
    }
    return push(std::move(n));
}

ValueId Tape::matvec(ValueId w, ValueId x) {
    const Tensor& W = nodes_[w].val;
    const Tensor& v = nodes_[x].val;
    if (W.shape.size() != 2 || v.shape.size() != 1 || W.cols() != v.numel()) {
        throw DimensionError("matvec: incompatible shapes " + W.shape_str() + " * " + v.shape_str());
    }
    Node n;
    n.op = Op::matvec;
    n.a = w;
    n.b = x;
    n.val = Tensor::zeros({W.rows()});
    for (int64_t r = 0; r < W.rows(); ++r) {
        double s = 0.0;
        for (int64_t c = 0; c < W.cols(); ++c) {
            s += W.at2(r, c) * v[c];
        }
        n.val[r] = s;
    }
    return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.val = cmrl::add(nodes_[a].val, nodes_[b].val);
    return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.val = cmrl::sub(nodes_[a].val, nodes_[b].val);
    return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.val = hadamard(nodes_[a].val, nodes_[b].val);
    return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double k) {
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.p0 = k;
    n.val = cmrl::scale(nodes_[a].val, k);
    return push(std::move(n));
}

ValueId Tape::affine(ValueId a, double k, double b) {
    Node n;
    n.op = Op::affine;
    n.a = a;
    n.p0 = k;
    n.p1 = b;
    n.val = nodes_[a].val;
    for (double& v : n.val.data) {
        v = k * v + b;
    }
    return push(std::move(n));
}

ValueId Tape::tanh_(ValueId a) {
    Node n;
    n.op = Op::tanh_op;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& v : n.val.data) {
        v = std::tanh(v);
    }
    return push(std::move(n));
}

ValueId Tape::exp_(ValueId a) {
    Node n;
    n.op = Op::exp_op;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& v : n.val.data) {
        v = std::exp(v);
    }
    return push(std::move(n));
}

ValueId Tape::sqrt_(ValueId a) {
    Node n;
    n.op = Op::sqrt_op;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& v : n.val.data) {
        v = std::sqrt(v);
    }
    return push(std::move(n));
}

ValueId Tape::sum_(ValueId a) {
    Node n;
    n.op = Op::sum_op;
    n.a = a;
    n.val = Tensor::scalar(cmrl::sum(nodes_[a].val));
    return push(std::move(n));
}

ValueId Tape::concat_(const std::vector<ValueId>& parts) {
    require(!parts.empty(), "concat: no parts");
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(parts.size());
    for (ValueId p : parts) {
        ptrs.push_back(&nodes_[p].val);
    }
    Node n;
    n.op = Op::concat_op;
    n.parents = parts;
    n.val = cmrl::concat(ptrs);
    return push(std::move(n));
}

ValueId Tape::clamp_(ValueId a, double lo, double hi) {
    require(lo <= hi, "clamp: lo > hi");
    Node n;
    n.op = Op::clamp_op;
    n.a = a;
    n.p0 = lo;
    n.p1 = hi;
    n.val = nodes_[a].val;
    for (double& v : n.val.data) {
        v = std::min(std::max(v, lo), hi);
    }
    return push(std::move(n));
}

ValueId Tape::min2(ValueId a, ValueId b) {
    Node n;
    n.op = Op::min2_op;
    n.a = a;
    n.b = b;
    const Tensor& ta = nodes_[a].val;
    const Tensor& tb = nodes_[b].val;
    require(ta.same_shape(tb), "min2: shape mismatch");
    n.val = ta;
    for (size_t i = 0; i < n.val.data.size(); ++i) {
        n.val.data[i] = std::min(ta.data[i], tb.data[i]);
    }
    return push(std::move(n));
}

ValueId Tape::row(ValueId matrix, int64_t r) {
    const Tensor& M = nodes_[matrix].val;
    require(M.shape.size() == 2, "row: matrix expected");
    require(r >= 0 && r < M.rows(), "row: index out of range");
    Node n;
    n.op = Op::row_op;
    n.a = matrix;
    n.p0 = static_cast<double>(r);
    n.val = Tensor::zeros({M.cols()});
    for (int64_t c = 0; c < M.cols(); ++c) {
        n.val[c] = M.at2(r, c);
    }
    return push(std::move(n));
}

Tensor Tape::eval_node(const Node& n, const std::vector<Tensor>& vals) const {
    switch (n.op) {
        case Op::input:
            return n.val;
        case Op::param:
            return n.store->entry(static_cast<size_t>(n.store_index)).value;
        case Op::matvec: {
            const Tensor& W = vals[n.a];
            const Tensor& x = vals[n.b];
            Tensor out = Tensor::zeros({W.rows()});
            for (int64_t r = 0; r < W.rows(); ++r) {
                double s = 0.0;
                for (int64_t c = 0; c < W.cols(); ++c) {
                    s += W.at2(r, c) * x[c];
                }
                out[r] = s;
            }
            return out;
        }
        case Op::add:
            return cmrl::add(vals[n.a], vals[n.b]);
        case Op::sub:
            return cmrl::sub(vals[n.a], vals[n.b]);
        case Op::mul:
            return hadamard(vals[n.a], vals[n.b]);
        case Op::scale:
            return cmrl::scale(vals[n.a], n.p0);
        case Op::affine: {
            Tensor out = vals[n.a];
            for (double& v : out.data) {
                v = n.p0 * v + n.p1;
            }
            return out;
        }
        case Op::tanh_op: {
            Tensor out = vals[n.a];
            for (double& v : out.data) {
                v = std::tanh(v);
            }
            return out;
        }
        case Op::exp_op: {
            Tensor out = vals[n.a];
            for (double& v : out.data) {
                v = std::exp(v);
            }
            return out;
        }
        case Op::sqrt_op: {
            Tensor out = vals[n.a];
            for (double& v : out.data) {
                v = std::sqrt(v);
            }
            return out;
        }
        case Op::sum_op:
            return Tensor::scalar(cmrl::sum(vals[n.a]));
        case Op::concat_op: {
            std::vector<const Tensor*> ptrs;
            for (ValueId p : n.parents) {
                ptrs.push_back(&vals[p]);
            }
            return cmrl::concat(ptrs);
        }
        case Op::clamp_op: {
            Tensor out = vals[n.a];
            for (double& v : out.data) {
                v = std::min(std::max(v, n.p0), n.p1);
            }
            return out;
        }
        case Op::min2_op: {
            Tensor out = vals[n.a];
            for (size_t i = 0; i < out.data.size(); ++i) {
                out.data[i] = std::min(vals[n.a].data[i], vals[n.b].data[i]);
            }
            return out;
        }
        case Op::row_op: {
            const Tensor& M = vals[n.a];
            int64_t r = static_cast<int64_t>(n.p0);
            Tensor out = Tensor::zeros({M.cols()});
            for (int64_t c = 0; c < M.cols(); ++c) {
                out[c] = M.at2(r, c);
            }
            return out;
        }
    }
    throw NumericError("unreachable op");
}

bool Tape::replay_matches() const {
    std::vector<Tensor> vals(nodes_.size());
    for (size_t i = 0; i < nodes_.size(); ++i) {
        vals[i] = eval_node(nodes_[i], vals);
        if (vals[i].shape != nodes_[i].val.shape || vals[i].data != nodes_[i].val.data) {
            return false;
        }
    }
    return true;
}

void backward(Tape& tape, ValueId loss) {
    require(!tape.consumed_, "backward: tape already consumed");
    require(loss < tape.nodes_.size(), "backward: bad loss id");
    if (tape.nodes_[loss].val.numel() != 1) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            tape.nodes_[loss].val.shape_str());
    }
    tape.consumed_ = true;
    for (ParamStore* s : tape.stores_) {
        s->zero_grads();
    }
    for (auto& n : tape.nodes_) {
        n.grad = Tensor::zeros(n.val.shape);
    }
    tape.nodes_[loss].grad[0] = 1.0;

    auto& nodes = tape.nodes_;
    for (size_t ii = nodes.size(); ii-- > 0;) {
        Tape::Node& n = nodes[ii];
        const Tensor& g = n.grad;
        bool any = false;
        for (double v : g.data) {
            if (v != 0.0) {
                any = true;
                break;
            }
        }
        if (!any) {
            continue;
        }
        switch (n.op) {
            case Tape::Op::input:
                break;
            case Tape::Op::param: {
                Tensor& pg = n.store->entry(static_cast<size_t>(n.store_index)).grad;
                for (size_t i = 0; i < pg.data.size(); ++i) {
                    pg.data[i] += g.data[i];
                }
                break;
            }
            case Tape::Op::matvec: {
                Tape::Node& wn = nodes[n.a];
                Tape::Node& xn = nodes[n.b];
                const Tensor& W = wn.val;
                const Tensor& x = xn.val;
                for (int64_t r = 0; r < W.rows(); ++r) {
                    double gr = g[r];
                    if (gr == 0.0) {
                        continue;
                    }
                    for (int64_t c = 0; c < W.cols(); ++c) {
                        wn.grad.at2(r, c) += gr * x[c];
                        xn.grad[c] += gr * W.at2(r, c);
                    }
                }
                break;
            }
            case Tape::Op::add:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += g.data[i];
                    nodes[n.b].grad.data[i] += g.data[i];
                }
                break;
            case Tape::Op::sub:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += g.data[i];
                    nodes[n.b].grad.data[i] -= g.data[i];
                }
                break;
            case Tape::Op::mul:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += g.data[i] * nodes[n.b].val.data[i];
                    nodes[n.b].grad.data[i] += g.data[i] * nodes[n.a].val.data[i];
                }
                break;
            case Tape::Op::scale:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += n.p0 * g.data[i];
                }
                break;
            case Tape::Op::affine:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += n.p0 * g.data[i];
                }
                break;
            case Tape::Op::tanh_op:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    double y = n.val.data[i];
                    nodes[n.a].grad.data[i] += g.data[i] * (1.0 - y * y);
                }
                break;
            case Tape::Op::exp_op:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += g.data[i] * n.val.data[i];
                }
                break;
            case Tape::Op::sqrt_op:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    nodes[n.a].grad.data[i] += g.data[i] * 0.5 / n.val.data[i];
                }
                break;
            case Tape::Op::sum_op: {
                double gs = g[0];
                for (double& v : nodes[n.a].grad.data) {
                    v += gs;
                }
                break;
            }
            case Tape::Op::concat_op: {
                int64_t off = 0;
                for (ValueId p : n.parents) {
                    Tape::Node& pn = nodes[p];
                    for (int64_t i = 0; i < pn.val.numel(); ++i) {
                        pn.grad[i] += g[off + i];
                    }
                    off += pn.val.numel();
                }
                break;
            }
            case Tape::Op::clamp_op:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    double x = nodes[n.a].val.data[i];
                    if (x >= n.p0 && x <= n.p1) {
                        nodes[n.a].grad.data[i] += g.data[i];
                    }
                }
                break;
            case Tape::Op::min2_op:
                for (size_t i = 0; i < g.data.size(); ++i) {
                    if (nodes[n.a].val.data[i] <= nodes[n.b].val.data[i]) {
                        nodes[n.a].grad.data[i] += g.data[i];
                    } else {
                        nodes[n.b].grad.data[i] += g.data[i];
                    }
                }
                break;
            case Tape::Op::row_op: {
                int64_t r = static_cast<int64_t>(n.p0);
                Tape::Node& mn = nodes[n.a];
                for (int64_t c = 0; c < mn.val.cols(); ++c) {
                    mn.grad.at2(r, c) += g[c];
                }
                break;
            }
        }
    }
}

}  // namespace cmrl
