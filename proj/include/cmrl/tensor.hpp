#ifndef CMRL_TENSOR_HPP
#define CMRL_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cmrl {

// Dense row-major tensor of 64-bit reals. A default-constructed Tensor is
// the "absent" state (no shape, no data) and is only valid as an optional
// argument; every populated tensor has all dimensions >= 1.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int64_t> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int64_t> shape);
    static Tensor full(std::vector<int64_t> shape, double v);
    static Tensor scalar(double v);
    static Tensor vec(std::vector<double> values);

    bool empty() const { return data.empty(); }
    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // 2-D access for weight matrices (rows x cols, row-major).
    int64_t rows() const { return shape.size() == 2 ? shape[0] : 0; }
    int64_t cols() const { return shape.size() == 2 ? shape[1] : 0; }
    double at2(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }
    double& at2(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }

    std::string shape_str() const;

    // Throws NumericError naming `who` if any entry is NaN or Inf.
    void check_finite(const std::string& who) const;
};

bool all_finite(const Tensor& t);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double k);
Tensor hadamard(const Tensor& a, const Tensor& b);
// y += k * x, in place.
void axpy(Tensor& y, double k, const Tensor& x);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);
double l2_dist(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);

Tensor concat(const std::vector<const Tensor*>& parts);

}  // namespace cmrl

#endif
