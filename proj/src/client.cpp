#include "fed/client.hpp"

namespace fed {

ClientNode::ClientNode(std::string client_id, ClientDataset dataset,
                       std::vector<ServerAddress> servers, TrainConfig train_config)
    : client_id_(std::move(client_id)),
      dataset_(std::move(dataset)),
      servers_(std::move(servers)),
      train_config_(train_config) {
    train_config_.validate();
    if (servers_.empty()) {
        throw InvalidConfig("ClientNode: server list is empty");
    }
    if (dataset_.row_count() == 0) {
        throw EmptyDataset("ClientNode: dataset has no rows");
    }
}

ClientRoundRecord ClientNode::run_round(std::uint64_t round, Transport& transport) {
    ClientRoundRecord record;
    record.round = round;
    try {
        const GlobalModel broadcast =
            fetch_model_with_failover(transport, servers_, client_id_, round);
        const TrainReport report = train_local(broadcast.weights, dataset_, train_config_);
        record.local_final_loss = report.loss_per_epoch.back();
        train_reports_.push_back(report);
        const ClientUpdate update =
            ClientUpdate::make(client_id_, broadcast.round, report.sample_count,
                               broadcast.weights, report.final_weights);
        const DeliveryResult delivery = connect_with_failover(transport, servers_, update, round);
        record.delivered_to = delivery.delivered_to;
    } catch (const AllServersUnreachable& ex) {
        record.failure = ex.what();
    }
    history_.push_back(record);
    return record;
}

std::vector<ClientRoundRecord> run_client(const std::string& client_id,
                                          const ClientDataset& dataset,
                                          const std::vector<ServerAddress>& servers,
                                          Transport& transport, const TrainConfig& train_config,
                                          std::uint64_t rounds) {
    if (rounds < 1) {
        throw InvalidConfig("run_client: rounds must be >= 1");
    }
    ClientNode node(client_id, dataset, servers, train_config);
    for (std::uint64_t r = 1; r <= rounds; ++r) {
        node.run_round(r, transport);
    }
    return node.history();
}

} // namespace fed
