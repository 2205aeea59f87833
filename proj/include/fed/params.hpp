#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fed/errors.hpp"

namespace fed {

/// Fixed-length vector of finite model weights. The unit of exchange
/// between clients and servers. Immutable after construction.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(std::vector<double> values);

    static ParameterVector zeros(std::size_t dim);

    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    bool operator==(const ParameterVector& other) const = default;

private:
    std::vector<double> values_;
};

enum class VecOp { Add, Sub, Mul, Div };

/// Elementwise arithmetic; dims must match, Div rejects zero divisors.
ParameterVector vec_combine(const ParameterVector& a, const ParameterVector& b, VecOp op);

/// Scalar multiple. Rejects non-finite scale factors.
ParameterVector vec_scale(const ParameterVector& a, double s);

/// Convex combination Σ (weight_i / Σ weights) · vector_i.
/// Summation runs left to right in list order.
ParameterVector weighted_mean(const std::vector<std::pair<ParameterVector, double>>& entries);

/// One client's contribution for a round. Build through make() so the
/// pseudo-gradient is broadcast − local by construction.
struct ClientUpdate {
    std::string client_id;
    std::uint64_t round = 0;
    std::uint64_t sample_count = 1;
    ParameterVector weights;
    ParameterVector pseudo_gradient;

    static ClientUpdate make(std::string client_id, std::uint64_t round,
                             std::uint64_t sample_count,
                             const ParameterVector& broadcast,
                             const ParameterVector& local_weights);

    void validate() const;

    bool operator==(const ClientUpdate&) const = default;
};

struct GlobalModel {
    ParameterVector weights;
    std::uint64_t round = 0;
    std::string server_id;

    bool operator==(const GlobalModel&) const = default;
};

} // namespace fed
