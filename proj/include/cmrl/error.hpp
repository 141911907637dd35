#ifndef CMRL_ERROR_HPP
#define CMRL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cmrl {

// Precondition / contract violations (bad arguments, shape mismatches, ...).
struct ContractError : std::invalid_argument {
    explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numeric failures detected at runtime (NaN/Inf loss, diverging training, ...).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch attributable to a specific layer or tensor.
struct DimensionError : ContractError {
    explicit DimensionError(const std::string& msg) : ContractError(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw ContractError(msg);
    }
}

}  // namespace cmrl

#endif
