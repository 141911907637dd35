#include "cmrl/tensor.hpp"

#include <cmath>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

static int64_t shape_product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    for (int64_t d : shape) {
        require(d >= 1, "tensor dimension must be >= 1");
    }
    require(shape_product(shape) == numel(), "tensor shape/data size mismatch");
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
    int64_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
    int64_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), v));
}

Tensor Tensor::scalar(double v) {
    return Tensor({1}, {v});
}

Tensor Tensor::vec(std::vector<double> values) {
    int64_t n = static_cast<int64_t>(values.size());
    return Tensor({n}, std::move(values));
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ")";
    return os.str();
}

void Tensor::check_finite(const std::string& who) const {
    if (!all_finite(*this)) {
        throw NumericError("non-finite value in " + who);
    }
}

bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += b.data[i];
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] -= b.data[i];
    }
    return out;
}

Tensor scale(const Tensor& a, double k) {
    Tensor out = a;
    for (double& v : out.data) {
        v *= k;
    }
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] *= b.data[i];
    }
    return out;
}

void axpy(Tensor& y, double k, const Tensor& x) {
    require_same_shape(y, x, "axpy");
    for (size_t i = 0; i < y.data.size(); ++i) {
        y.data[i] += k * x.data[i];
    }
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        s += a.data[i] * b.data[i];
    }
    return s;
}

double l2_norm(const Tensor& a) {
    return std::sqrt(dot(a, a));
}

double l2_dist(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "l2_dist");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) {
        s += v;
    }
    return s;
}

Tensor concat(const std::vector<const Tensor*>& parts) {
    int64_t n = 0;
    for (const Tensor* p : parts) {
        if (p != nullptr && !p->empty()) {
            n += p->numel();
        }
    }
    require(n >= 1, "concat: empty result");
    Tensor out = Tensor::zeros({n});
    int64_t off = 0;
    for (const Tensor* p : parts) {
        if (p == nullptr || p->empty()) {
            continue;
        }
        for (int64_t i = 0; i < p->numel(); ++i) {
            out[off + i] = (*p)[i];
        }
        off += p->numel();
    }
    return out;
}

}  // namespace cmrl
