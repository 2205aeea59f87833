#include "fed/server.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "fed/trainer.hpp"

namespace fed {

std::size_t ServerConfig::effective_quorum() const {
    return quorum == 0 ? expected_clients.size() : quorum;
}

void ServerConfig::validate() const {
    aggregator.validate();
    if (expected_clients.empty()) {
        throw InvalidConfig("ServerConfig: expected_clients is empty");
    }
    if (effective_quorum() < 1 || effective_quorum() > expected_clients.size()) {
        throw InvalidConfig("ServerConfig: quorum must lie in [1, |expected_clients|]");
    }
    if (rounds < 1) {
        throw InvalidConfig("ServerConfig: rounds must be >= 1");
    }
}

GlobalServer::GlobalServer(ServerConfig config, GlobalModel initial, Clock clock)
    : config_(std::move(config)), model_(std::move(initial)), clock_(std::move(clock)) {
    config_.validate();
    model_.server_id = config_.id;
    state_ = reset_state(config_.aggregator, model_.weights.dim());
    if (!clock_) {
        clock_ = [] {
            return std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    }
}

Envelope GlobalServer::handle(const Envelope& request) {
    std::lock_guard lock(mutex_);
    Envelope resp;
    resp.sender = config_.id;
    switch (request.kind) {
    case MsgKind::Hello: {
        resp.kind = MsgKind::ModelBroadcast;
        resp.round = model_.round;
        resp.payload = model_;
        return resp;
    }
    case MsgKind::Update: {
        const auto* update = std::get_if<ClientUpdate>(&request.payload);
        if (!update) {
            resp.kind = MsgKind::Error;
            resp.payload = ErrorBody{400, "update envelope without update payload"};
            return resp;
        }
        const bool expected =
            std::find(config_.expected_clients.begin(), config_.expected_clients.end(),
                      update->client_id) != config_.expected_clients.end();
        if (!expected) {
            resp.kind = MsgKind::Error;
            resp.payload = ErrorBody{403, "client not in this server's cohort"};
            return resp;
        }
        if (update->weights.dim() != model_.weights.dim()) {
            resp.kind = MsgKind::Error;
            resp.payload = ErrorBody{400, "update dimension does not match the model"};
            return resp;
        }
        // Stale rounds are acked but never reach the aggregator; a
        // repeat from the same client replaces the pending entry.
        if (update->round == model_.round) {
            pending_[update->client_id] = *update;
        }
        resp.kind = MsgKind::Ack;
        resp.round = model_.round;
        return resp;
    }
    default:
        resp.kind = MsgKind::Error;
        resp.payload = ErrorBody{400, "unexpected request kind"};
        return resp;
    }
}

RoundRecord GlobalServer::finish_round() {
    std::lock_guard lock(mutex_);
    RoundRecord record;
    record.round = ++attempts_;
    record.aggregated_at = clock_();
    if (pending_.size() >= config_.effective_quorum()) {
        std::vector<ClientUpdate> updates;
        updates.reserve(pending_.size());
        for (auto& [id, u] : pending_) {
            record.participants.push_back(id);
            updates.push_back(u);
        }
        auto result = aggregate(config_.aggregator, state_, model_, std::move(updates));
        model_ = std::move(result.model);
        state_ = std::move(result.state);
        record.aggregated = true;
    }
    pending_.clear();
    record.eval_loss =
        config_.eval_dataset.row_count() > 0 ? evaluate(model_.weights, config_.eval_dataset) : 0.0;
    records_.push_back(record);
    return record;
}

std::size_t GlobalServer::pending_count() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
}

std::vector<RoundRecord> run_server(GlobalServer& server, std::uint16_t port) {
    TcpListener listener(port, [&server](const Envelope& req) { return server.handle(req); });
    const auto timeout =
        std::chrono::duration<double>(server.config().round_timeout_seconds);
    for (std::uint64_t round = 1; round <= server.config().rounds; ++round) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (server.pending_count() < server.config().expected_clients.size() &&
               std::chrono::steady_clock::now() < deadline) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        server.finish_round();
    }
    listener.stop();
    return server.records();
}

std::vector<std::pair<std::uint64_t, double>> eval_history(std::vector<RoundRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const RoundRecord& a, const RoundRecord& b) { return a.round < b.round; });
    std::vector<std::pair<std::uint64_t, double>> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.emplace_back(r.round, r.eval_loss);
    }
    return out;
}

} // namespace fed
