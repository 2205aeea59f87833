#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fed/params.hpp"

namespace fed {

enum class Strategy { FedAvg, FedAvgM, FedAdaGrad, FedYogi, FedAdam };
enum class UpdateMode { Replace, Delta };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(UpdateMode m);
UpdateMode update_mode_from_string(const std::string& s);

struct AggregatorConfig {
    Strategy strategy = Strategy::FedAvg;
    double eta = 1.0;        // server learning rate
    double beta1 = 0.9;      // first-moment decay (Adam/Yogi)
    double beta2 = 0.99;     // second-moment decay (Adam/Yogi)
    double epsilon = 1e-3;   // adaptivity floor
    double momentum = 0.9;   // FedAvgM velocity decay; 0 reproduces the plain recurrence
    UpdateMode update_mode = UpdateMode::Replace;

    /// eta = 0.1 for adaptive strategies, 1.0 for FedAvg.
    static AggregatorConfig defaults(Strategy strategy,
                                     UpdateMode mode = UpdateMode::Replace);

    void validate() const;

    bool operator==(const AggregatorConfig&) const = default;
};

/// Per-server optimizer state. Owned by exactly one server loop.
struct AggregatorState {
    std::optional<ParameterVector> velocity;     // FedAvgM
    std::optional<ParameterVector> accumulator;  // FedAdaGrad, elementwise >= 0
    std::optional<ParameterVector> moment1;      // Adam/Yogi m
    std::optional<ParameterVector> moment2;      // Adam/Yogi v
    std::uint64_t round = 0;

    bool operator==(const AggregatorState&) const = default;
};

/// Zero-initialized state with every vector the strategy needs.
AggregatorState reset_state(const AggregatorConfig& config, std::size_t dim);

struct AggregationResult {
    GlobalModel model;
    AggregatorState state;
};

/// One server-side aggregation step. Pure: same inputs give the same
/// outputs bitwise. Updates are summed in ascending client_id order.
AggregationResult aggregate(const AggregatorConfig& config, const AggregatorState& state,
                            const GlobalModel& current, std::vector<ClientUpdate> updates);

} // namespace fed
