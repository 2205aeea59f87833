#include "fed/transport.hpp"

#include <algorithm>

namespace fed {

bool FaultWindow::covers(const std::string& id, std::uint64_t round) const {
    if (id != server_id || round < from_round) return false;
    return !to_round || round <= *to_round;
}

void FaultPlan::validate() const {
    for (std::size_t i = 0; i < windows.size(); ++i) {
        for (std::size_t j = i + 1; j < windows.size(); ++j) {
            const auto& a = windows[i];
            const auto& b = windows[j];
            if (a.server_id != b.server_id) continue;
            const std::uint64_t a_end = a.to_round.value_or(UINT64_MAX);
            const std::uint64_t b_end = b.to_round.value_or(UINT64_MAX);
            if (a.from_round <= b_end && b.from_round <= a_end) {
                throw InvalidConfig("FaultPlan: overlapping windows for server " + a.server_id);
            }
        }
    }
}

std::optional<FaultMode> FaultPlan::fault_for(const std::string& server_id,
                                              std::uint64_t round) const {
    for (const auto& w : windows) {
        if (w.covers(server_id, round)) return w.mode;
    }
    return std::nullopt;
}

namespace {

class SimConnection : public Connection {
public:
    SimConnection(EnvelopeHandler handler, bool drop_mid_message)
        : handler_(std::move(handler)), drop_(drop_mid_message) {}

    Envelope roundtrip(const Envelope& request) override {
        // Run the request through the real codec so the wire format is
        // exercised on every simulated exchange.
        const auto frame = encode(request);
        if (drop_) {
            // The peer saw the frame header and nothing else; the
            // request is never delivered.
            throw PartialDelivery("connection dropped mid-message");
        }
        const Envelope delivered = decode(frame);
        const Envelope response = handler_(delivered);
        return decode(encode(response));
    }

private:
    EnvelopeHandler handler_;
    bool drop_;
};

} // namespace

void SimTransport::register_server(const std::string& id, EnvelopeHandler handler) {
    std::lock_guard lock(mutex_);
    handlers_[id] = std::move(handler);
}

void SimTransport::set_fault_plan(FaultPlan plan) {
    plan.validate();
    std::lock_guard lock(mutex_);
    plan_ = std::move(plan);
}

std::unique_ptr<Connection> SimTransport::dial(const ServerAddress& address, std::uint64_t round) {
    std::lock_guard lock(mutex_);
    const auto fault = plan_.fault_for(address.id, round);
    if (fault == FaultMode::Refuse) {
        throw ConnectionRefused("connection refused by " + address.id);
    }
    auto it = handlers_.find(address.id);
    if (it == handlers_.end()) {
        throw ConnectionRefused("no such server: " + address.id);
    }
    return std::make_unique<SimConnection>(it->second, fault == FaultMode::DropMidMessage);
}

namespace {

// One scan of the server list per Algorithm-1 semantics: first success
// wins, every failure moves to the next entry.
template <typename Fn>
auto failover_scan(Transport& transport, const std::vector<ServerAddress>& servers,
                   std::uint64_t round, Fn&& attempt) {
    if (servers.empty()) {
        throw InvalidConfig("failover: server list is empty");
    }
    for (const auto& addr : servers) {
        try {
            auto conn = transport.dial(addr, round);
            return attempt(*conn, addr);
        } catch (const ConnectionRefused&) {
        } catch (const PartialDelivery&) {
        } catch (const CodecError&) {
        }
    }
    throw AllServersUnreachable("Failed to connect to all servers.");
}

} // namespace

DeliveryResult connect_with_failover(Transport& transport,
                                     const std::vector<ServerAddress>& servers,
                                     const ClientUpdate& update, std::uint64_t round) {
    Envelope req;
    req.kind = MsgKind::Update;
    req.round = update.round;
    req.sender = update.client_id;
    req.payload = update;
    return failover_scan(transport, servers, round,
                         [&](Connection& conn, const ServerAddress& addr) -> DeliveryResult {
                             const Envelope resp = conn.roundtrip(req);
                             if (resp.kind != MsgKind::Ack) {
                                 throw PartialDelivery("no ack from " + addr.id);
                             }
                             return DeliveryResult{addr.id};
                         });
}

GlobalModel fetch_model_with_failover(Transport& transport,
                                      const std::vector<ServerAddress>& servers,
                                      const std::string& client_id, std::uint64_t round) {
    Envelope req;
    req.kind = MsgKind::Hello;
    req.round = round;
    req.sender = client_id;
    return failover_scan(transport, servers, round,
                         [&](Connection& conn, const ServerAddress& addr) -> GlobalModel {
                             const Envelope resp = conn.roundtrip(req);
                             const auto* model = std::get_if<GlobalModel>(&resp.payload);
                             if (resp.kind != MsgKind::ModelBroadcast || !model) {
                                 throw PartialDelivery("no model broadcast from " + addr.id);
                             }
                             return *model;
                         });
}

} // namespace fed
