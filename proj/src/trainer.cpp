#include "fed/trainer.hpp"

#include <cmath>

namespace fed {

ParameterVector LinearModel::flatten() const {
    std::vector<double> flat(coefficients.begin(), coefficients.end());
    flat.push_back(bias);
    return ParameterVector(std::move(flat));
}

LinearModel LinearModel::unflatten(const ParameterVector& flat) {
    if (flat.dim() < 1) {
        throw DimensionMismatch("LinearModel::unflatten: need at least the bias");
    }
    std::vector<double> coefs(flat.begin(), flat.end() - 1);
    return LinearModel{ParameterVector(std::move(coefs)), flat[flat.dim() - 1]};
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw InvalidConfig("TrainConfig: epochs must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidConfig("TrainConfig: learning_rate must be positive");
    }
}

namespace {

void check_dims(const ParameterVector& weights, const ClientDataset& dataset) {
    if (dataset.row_count() == 0) {
        throw EmptyDataset("dataset has no rows");
    }
    if (weights.dim() != dataset.feature_count() + 1) {
        throw DimensionMismatch("weights dim " + std::to_string(weights.dim()) +
                                " != feature_count + 1 = " +
                                std::to_string(dataset.feature_count() + 1));
    }
}

double predict_row(const ParameterVector& w, const ClientDataset& d, std::size_t row) {
    const std::size_t n = d.feature_count();
    double p = w[n];  // bias
    for (std::size_t j = 0; j < n; ++j) {
        p += w[j] * d.features.at(row, j);
    }
    return p;
}

} // namespace

double evaluate(const ParameterVector& weights, const ClientDataset& dataset) {
    check_dims(weights, dataset);
    const std::size_t m = dataset.row_count();
    double sum = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double res = predict_row(weights, dataset, r) - dataset.targets[r];
        sum += res * res;
    }
    return sum / static_cast<double>(m);
}

ParameterVector gradient(const ParameterVector& weights, const ClientDataset& dataset) {
    check_dims(weights, dataset);
    const std::size_t m = dataset.row_count();
    const std::size_t n = dataset.feature_count();
    std::vector<double> grad(n + 1, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double res = predict_row(weights, dataset, r) - dataset.targets[r];
        for (std::size_t j = 0; j < n; ++j) {
            grad[j] += res * dataset.features.at(r, j);
        }
        grad[n] += res;
    }
    const double scale = 2.0 / static_cast<double>(m);
    for (double& g : grad) g *= scale;
    return ParameterVector(std::move(grad));
}

TrainReport train_local(const ParameterVector& start, const ClientDataset& dataset,
                        const TrainConfig& config) {
    config.validate();
    check_dims(start, dataset);
    TrainReport report;
    report.sample_count = dataset.row_count();
    report.loss_per_epoch.reserve(config.epochs);
    ParameterVector w = start;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        w = vec_combine(w, vec_scale(gradient(w, dataset), config.learning_rate), VecOp::Sub);
        report.loss_per_epoch.push_back(evaluate(w, dataset));
    }
    report.final_weights = std::move(w);
    return report;
}

} // namespace fed
