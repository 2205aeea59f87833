#include "fed/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace fed {

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::FedAvg: return "fedavg";
    case Strategy::FedAvgM: return "fedavgm";
    case Strategy::FedAdaGrad: return "fedadagrad";
    case Strategy::FedYogi: return "fedyogi";
    case Strategy::FedAdam: return "fedadam";
    }
    return "fedavg";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "fedavg") return Strategy::FedAvg;
    if (s == "fedavgm") return Strategy::FedAvgM;
    if (s == "fedadagrad") return Strategy::FedAdaGrad;
    if (s == "fedyogi") return Strategy::FedYogi;
    if (s == "fedadam") return Strategy::FedAdam;
    throw InvalidConfig("unknown strategy: " + s);
}

std::string to_string(UpdateMode m) {
    return m == UpdateMode::Replace ? "replace" : "delta";
}

UpdateMode update_mode_from_string(const std::string& s) {
    if (s == "replace") return UpdateMode::Replace;
    if (s == "delta") return UpdateMode::Delta;
    throw InvalidConfig("unknown update mode: " + s);
}

AggregatorConfig AggregatorConfig::defaults(Strategy strategy, UpdateMode mode) {
    AggregatorConfig cfg;
    cfg.strategy = strategy;
    cfg.update_mode = mode;
    cfg.eta = (strategy == Strategy::FedAvg) ? 1.0 : 0.1;
    return cfg;
}

void AggregatorConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidConfig("AggregatorConfig: eta must be positive");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw InvalidConfig("AggregatorConfig: epsilon must be positive");
    }
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw InvalidConfig("AggregatorConfig: beta1/beta2 must lie in [0,1)");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw InvalidConfig("AggregatorConfig: momentum must lie in [0,1)");
    }
}

AggregatorState reset_state(const AggregatorConfig& config, std::size_t dim) {
    if (dim < 1) {
        throw InvalidConfig("reset_state: dim must be >= 1");
    }
    AggregatorState state;
    switch (config.strategy) {
    case Strategy::FedAvg:
        break;
    case Strategy::FedAvgM:
        state.velocity = ParameterVector::zeros(dim);
        break;
    case Strategy::FedAdaGrad:
        state.accumulator = ParameterVector::zeros(dim);
        break;
    case Strategy::FedYogi:
    case Strategy::FedAdam:
        state.moment1 = ParameterVector::zeros(dim);
        state.moment2 = ParameterVector::zeros(dim);
        break;
    }
    return state;
}

namespace {

// Mean pseudo-gradient: uniform 1/C for FedAvgM/FedAdaGrad, n_i/N for
// Adam and Yogi. Updates must already be in canonical order.
std::vector<double> mean_gradient(const std::vector<ClientUpdate>& updates, bool sample_weighted) {
    const std::size_t dim = updates.front().pseudo_gradient.dim();
    std::vector<double> g(dim, 0.0);
    if (sample_weighted) {
        double total = 0.0;
        for (const auto& u : updates) total += static_cast<double>(u.sample_count);
        for (const auto& u : updates) {
            const double frac = static_cast<double>(u.sample_count) / total;
            for (std::size_t i = 0; i < dim; ++i) g[i] += frac * u.pseudo_gradient[i];
        }
    } else {
        const double inv = 1.0 / static_cast<double>(updates.size());
        for (const auto& u : updates) {
            for (std::size_t i = 0; i < dim; ++i) g[i] += inv * u.pseudo_gradient[i];
        }
    }
    return g;
}

} // namespace

AggregationResult aggregate(const AggregatorConfig& config, const AggregatorState& state,
                            const GlobalModel& current, std::vector<ClientUpdate> updates) {
    config.validate();
    if (updates.empty()) {
        throw EmptyInput("aggregate: no updates");
    }
    const std::size_t dim = current.weights.dim();
    for (const auto& u : updates) {
        u.validate();
        if (u.weights.dim() != dim) {
            throw DimensionMismatch("aggregate: update dim does not match model dim");
        }
        if (u.round != current.round) {
            throw RoundMismatch("aggregate: update from round " + std::to_string(u.round) +
                                " against model round " + std::to_string(current.round));
        }
    }
    // Canonical summation order for bitwise reproducibility.
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });

    AggregatorState next = state;
    std::vector<double> w(current.weights.begin(), current.weights.end());

    switch (config.strategy) {
    case Strategy::FedAvg: {
        if (config.update_mode == UpdateMode::Replace) {
            std::vector<std::pair<ParameterVector, double>> entries;
            entries.reserve(updates.size());
            for (const auto& u : updates) {
                entries.emplace_back(u.weights, static_cast<double>(u.sample_count));
            }
            w = weighted_mean(entries).values();
        } else {
            // theta + eta * sum((n_i/N) * delta_i) with delta_i the
            // client's descent step, i.e. the negated pseudo-gradient.
            const auto g = mean_gradient(updates, /*sample_weighted=*/true);
            for (std::size_t i = 0; i < dim; ++i) w[i] -= config.eta * g[i];
        }
        break;
    }
    case Strategy::FedAvgM: {
        const auto g = mean_gradient(updates, /*sample_weighted=*/false);
        std::vector<double> v(next.velocity->begin(), next.velocity->end());
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = config.momentum * v[i] + config.eta * g[i];
            w[i] -= v[i];
        }
        next.velocity = ParameterVector(std::move(v));
        break;
    }
    case Strategy::FedAdaGrad: {
        const auto g = mean_gradient(updates, /*sample_weighted=*/false);
        std::vector<double> acc(next.accumulator->begin(), next.accumulator->end());
        for (std::size_t i = 0; i < dim; ++i) {
            acc[i] += g[i] * g[i];
            w[i] -= config.eta * g[i] / (std::sqrt(acc[i]) + config.epsilon);
        }
        next.accumulator = ParameterVector(std::move(acc));
        break;
    }
    case Strategy::FedYogi:
    case Strategy::FedAdam: {
        const auto g = mean_gradient(updates, /*sample_weighted=*/true);
        std::vector<double> m(next.moment1->begin(), next.moment1->end());
        std::vector<double> v(next.moment2->begin(), next.moment2->end());
        for (std::size_t i = 0; i < dim; ++i) {
            const double g2 = g[i] * g[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            if (config.strategy == Strategy::FedAdam) {
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g2;
            } else {
                const double s = (v[i] - g2 > 0.0) ? 1.0 : ((v[i] - g2 < 0.0) ? -1.0 : 0.0);
                v[i] -= (1.0 - config.beta2) * g2 * s;
            }
            w[i] -= config.eta * m[i] / (std::sqrt(v[i]) + config.epsilon);
        }
        next.moment1 = ParameterVector(std::move(m));
        next.moment2 = ParameterVector(std::move(v));
        break;
    }
    }

    next.round = state.round + 1;
    GlobalModel out{ParameterVector(std::move(w)), current.round + 1, current.server_id};
    return AggregationResult{std::move(out), std::move(next)};
}

} // namespace fed
