#pragma once

#include <cstdint>
#include <vector>

#include "fed/data.hpp"
#include "fed/params.hpp"

namespace fed {

/// Linear predictor over the encoded feature space. Flattened layout is
/// [coefficients..., bias], so dim = feature_count + 1.
struct LinearModel {
    ParameterVector coefficients;
    double bias = 0.0;

    ParameterVector flatten() const;
    static LinearModel unflatten(const ParameterVector& flat);
};

struct TrainConfig {
    std::uint32_t epochs = 25;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;  // reserved for minibatching; unused by full-batch descent

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TrainReport {
    std::vector<double> loss_per_epoch;
    ParameterVector final_weights;
    std::uint64_t sample_count = 0;
};

/// Mean squared error of the flattened weights over the dataset.
double evaluate(const ParameterVector& weights, const ClientDataset& dataset);

/// Analytic gradient of evaluate with respect to the flattened weights.
ParameterVector gradient(const ParameterVector& weights, const ClientDataset& dataset);

/// Full-batch gradient descent from `start`; deterministic.
TrainReport train_local(const ParameterVector& start, const ClientDataset& dataset,
                        const TrainConfig& config);

} // namespace fed
