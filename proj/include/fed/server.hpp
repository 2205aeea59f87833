#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fed/aggregation.hpp"
#include "fed/data.hpp"
#include "fed/transport.hpp"

namespace fed {

struct ServerConfig {
    std::string id;
    AggregatorConfig aggregator;
    std::vector<std::string> expected_clients;
    std::size_t quorum = 0;  // 0 means |expected_clients|
    std::uint64_t rounds = 3;
    double round_timeout_seconds = 10.0;  // real-transport mode only
    ClientDataset eval_dataset;

    std::size_t effective_quorum() const;
    void validate() const;
};

struct RoundRecord {
    std::uint64_t round = 0;  // 1-based aggregation attempt index
    std::vector<std::string> participants;
    double eval_loss = 0.0;
    bool aggregated = false;  // false = quorum not met, model carried forward
    std::int64_t aggregated_at = 0;

    bool operator==(const RoundRecord&) const = default;
};

/// Deterministic stand-in clock for simulated runs; wall clock for the
/// real transport.
using Clock = std::function<std::int64_t()>;

/// One global server. handle() serves the transport layer; the owner
/// (harness lockstep loop or run_server) calls finish_round() to close
/// out each collection phase.
class GlobalServer {
public:
    GlobalServer(ServerConfig config, GlobalModel initial, Clock clock = {});

    /// Hello -> ModelBroadcast of the current model; Update -> Ack.
    /// Stale-round updates are acked but discarded; a duplicate from
    /// the same client overwrites the pending entry (last write wins).
    Envelope handle(const Envelope& request);

    /// Aggregate the pending cohort if it meets quorum, else record a
    /// failed round and carry the model forward unchanged.
    RoundRecord finish_round();

    const GlobalModel& model() const { return model_; }
    std::size_t pending_count() const;
    const std::vector<RoundRecord>& records() const { return records_; }
    const ServerConfig& config() const { return config_; }

private:
    ServerConfig config_;
    GlobalModel model_;
    AggregatorState state_;
    std::map<std::string, ClientUpdate> pending_;
    std::vector<RoundRecord> records_;
    std::uint64_t attempts_ = 0;
    Clock clock_;
    mutable std::mutex mutex_;
};

/// Drive a server for config.rounds rounds against a transport
/// listener, closing each round when the full cohort has reported or
/// the round timeout has elapsed. Used by the real-transport CLI mode.
std::vector<RoundRecord> run_server(GlobalServer& server, std::uint16_t port);

/// Projection of (round, eval_loss) in ascending round order.
std::vector<std::pair<std::uint64_t, double>> eval_history(std::vector<RoundRecord> records);

} // namespace fed
