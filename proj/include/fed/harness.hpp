#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fed/client.hpp"
#include "fed/server.hpp"

namespace fed {

enum class Assignment { Shared, Disjoint, Explicit };

/// Per-server entry in the experiment topology.
struct ServerSpec {
    std::string id;
    std::string endpoint = "sim";  // "sim" or host:port
    AggregatorConfig aggregator = AggregatorConfig::defaults(Strategy::FedAvg);
    std::size_t quorum = 0;  // 0 = full cohort

    bool operator==(const ServerSpec&) const = default;
};

struct CsvSource {
    std::string events_path;
    std::string region_map_path;
    std::string schema_path;  // optional header renames

    bool operator==(const CsvSource&) const = default;
};

struct ExperimentConfig {
    std::optional<CsvSource> csv;  // synthetic when absent
    SyntheticSpec synthetic;
    std::vector<ServerSpec> servers;
    Assignment assignment = Assignment::Shared;
    // client (region) -> ordered server ids; Explicit assignment only.
    std::map<std::string, std::vector<std::string>> explicit_assignment;
    TrainConfig train;
    std::uint64_t rounds = 3;
    FaultPlan fault_plan;
    std::uint64_t seed = 0;
    double eval_fraction = 0.1;
    std::string output_dir;

    void validate() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& config);

struct ClientRoundTraining {
    std::string client_id;
    std::uint64_t round = 0;
    TrainReport report;
};

struct ServerRun {
    std::string server_id;
    std::vector<RoundRecord> records;
};

struct DeliveryLogEntry {
    std::string client_id;
    std::uint64_t round = 0;
    std::optional<std::string> delivered_to;  // absent = FAILED
};

struct MetricsBundle {
    std::vector<ClientRoundTraining> training;
    std::vector<ServerRun> servers;
    std::vector<DeliveryLogEntry> deliveries;
    std::uint64_t rounds = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::string config_snapshot;  // JSON text
};

/// Run the full experiment: load or generate data, partition by
/// region, hold out the eval split, then drive servers and clients in
/// round lockstep. Deterministic for a fixed config on the simulated
/// transport.
MetricsBundle run_experiment(const ExperimentConfig& config);

struct CompareResult {
    double relative_final_loss_gap = 0.0;
    std::vector<double> per_round_gaps;
};

/// |L_multi - L_single| / L_single on each run's best server.
CompareResult compare(const MetricsBundle& multi, const MetricsBundle& single);

/// Write client_loss.csv, server_loss.csv, delivery.csv, config.json.
void export_bundle(const MetricsBundle& bundle, const std::string& dir);

/// Distributed mode: host one of the config's servers on its TCP
/// endpoint for config.rounds rounds, closing each round when the full
/// cohort reported or the timeout elapsed. Returns its round records.
std::vector<RoundRecord> serve(const ExperimentConfig& config, const std::string& server_id);

/// Distributed mode: run one client against the config's TCP servers.
std::vector<ClientRoundRecord> join(const ExperimentConfig& config, const std::string& client_id);

} // namespace fed
