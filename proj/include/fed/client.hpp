#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fed/data.hpp"
#include "fed/trainer.hpp"
#include "fed/transport.hpp"

namespace fed {

/// One edge client: fetches the broadcast model over the failover scan,
/// trains locally, and delivers its update the same way. A failed round
/// is recorded and skipped; the loop never aborts.
class ClientNode {
public:
    ClientNode(std::string client_id, ClientDataset dataset, std::vector<ServerAddress> servers,
               TrainConfig train_config);

    /// Execute one experiment round (1-based). Returns the record; also
    /// appended to history().
    ClientRoundRecord run_round(std::uint64_t round, Transport& transport);

    const std::vector<ClientRoundRecord>& history() const { return history_; }
    const std::vector<TrainReport>& train_reports() const { return train_reports_; }
    const std::string& id() const { return client_id_; }

private:
    std::string client_id_;
    ClientDataset dataset_;
    std::vector<ServerAddress> servers_;
    TrainConfig train_config_;
    std::vector<ClientRoundRecord> history_;
    std::vector<TrainReport> train_reports_;
};

/// Run a client for `rounds` rounds back to back. Suitable when the
/// server aggregates as soon as its quorum is met (e.g. quorum 1) or on
/// the real transport where rounds advance on timeouts.
std::vector<ClientRoundRecord> run_client(const std::string& client_id,
                                          const ClientDataset& dataset,
                                          const std::vector<ServerAddress>& servers,
                                          Transport& transport, const TrainConfig& train_config,
                                          std::uint64_t rounds);

} // namespace fed
