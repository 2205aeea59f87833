#include "fed/params.hpp"

#include <cmath>
#include <utility>

namespace fed {

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue("ParameterVector element is not finite");
        }
    }
}

ParameterVector ParameterVector::zeros(std::size_t dim) {
    return ParameterVector(std::vector<double>(dim, 0.0));
}

ParameterVector vec_combine(const ParameterVector& a, const ParameterVector& b, VecOp op) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("vec_combine: dims " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        switch (op) {
        case VecOp::Add: out[i] = a[i] + b[i]; break;
        case VecOp::Sub: out[i] = a[i] - b[i]; break;
        case VecOp::Mul: out[i] = a[i] * b[i]; break;
        case VecOp::Div:
            if (b[i] == 0.0) {
                throw DivisionByZero("vec_combine: zero divisor at index " + std::to_string(i));
            }
            out[i] = a[i] / b[i];
            break;
        }
    }
    return ParameterVector(std::move(out));
}

ParameterVector vec_scale(const ParameterVector& a, double s) {
    if (!std::isfinite(s)) {
        throw NonFiniteScalar("vec_scale: scale factor is not finite");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        out[i] = s * a[i];
    }
    return ParameterVector(std::move(out));
}

ParameterVector weighted_mean(const std::vector<std::pair<ParameterVector, double>>& entries) {
    if (entries.empty()) {
        throw EmptyInput("weighted_mean: empty input");
    }
    const std::size_t dim = entries.front().first.dim();
    double total = 0.0;
    for (const auto& [vec, w] : entries) {
        if (vec.dim() != dim) {
            throw DimensionMismatch("weighted_mean: inconsistent dims");
        }
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw NonFiniteScalar("weighted_mean: weights must be positive and finite");
        }
        total += w;
    }
    std::vector<double> out(dim, 0.0);
    for (const auto& [vec, w] : entries) {
        const double frac = w / total;
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] += frac * vec[i];
        }
    }
    return ParameterVector(std::move(out));
}

ClientUpdate ClientUpdate::make(std::string client_id, std::uint64_t round,
                                std::uint64_t sample_count,
                                const ParameterVector& broadcast,
                                const ParameterVector& local_weights) {
    ClientUpdate u;
    u.client_id = std::move(client_id);
    u.round = round;
    u.sample_count = sample_count;
    u.weights = local_weights;
    u.pseudo_gradient = vec_combine(broadcast, local_weights, VecOp::Sub);
    u.validate();
    return u;
}

void ClientUpdate::validate() const {
    if (sample_count < 1) {
        throw InvalidConfig("ClientUpdate: sample_count must be >= 1");
    }
    if (weights.dim() != pseudo_gradient.dim()) {
        throw DimensionMismatch("ClientUpdate: weights/pseudo_gradient dim mismatch");
    }
}

} // namespace fed
