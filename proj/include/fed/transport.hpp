#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fed/params.hpp"

namespace fed {

struct ServerAddress {
    std::string id;
    std::string endpoint;  // "sim" or host:port

    bool operator==(const ServerAddress&) const = default;
};

enum class MsgKind { Hello, ModelBroadcast, Update, Ack, Error };

std::string to_string(MsgKind k);
MsgKind msg_kind_from_string(const std::string& s);

struct ErrorBody {
    int code = 0;
    std::string message;

    bool operator==(const ErrorBody&) const = default;
};

/// Framed wire message. The payload alternative must match the kind:
/// ModelBroadcast carries a GlobalModel, Update a ClientUpdate, Error an
/// ErrorBody; Hello and Ack carry nothing.
struct Envelope {
    MsgKind kind = MsgKind::Hello;
    std::uint64_t round = 0;
    std::string sender;
    std::variant<std::monostate, GlobalModel, ClientUpdate, ErrorBody> payload;

    bool operator==(const Envelope&) const = default;
};

/// Frame: 4-byte big-endian payload length, then UTF-8 JSON.
std::vector<std::uint8_t> encode(const Envelope& e);
Envelope decode(std::span<const std::uint8_t> frame);

// ---------------------------------------------------------------------------
// Fault injection

enum class FaultMode { Refuse, DropMidMessage };

struct FaultWindow {
    std::string server_id;
    std::uint64_t from_round = 1;                 // inclusive, 1-based experiment round
    std::optional<std::uint64_t> to_round = {};   // inclusive; absent = forever
    FaultMode mode = FaultMode::Refuse;

    bool covers(const std::string& id, std::uint64_t round) const;
    bool operator==(const FaultWindow&) const = default;
};

struct FaultPlan {
    std::vector<FaultWindow> windows;

    void validate() const;  // windows must not overlap per server
    std::optional<FaultMode> fault_for(const std::string& server_id, std::uint64_t round) const;
    bool empty() const { return windows.empty(); }
    bool operator==(const FaultPlan&) const = default;
};

// ---------------------------------------------------------------------------
// Transport interface

class Connection {
public:
    virtual ~Connection() = default;
    /// Send one envelope and wait for the reply.
    virtual Envelope roundtrip(const Envelope& request) = 0;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Open a connection. `round` is the current experiment round, used
    /// by fault schedules; real transports ignore it.
    virtual std::unique_ptr<Connection> dial(const ServerAddress& address, std::uint64_t round) = 0;
};

/// Request handler exposed by a server to the transport layer.
using EnvelopeHandler = std::function<Envelope(const Envelope&)>;

/// In-process transport: deterministic, no sockets. Every message still
/// passes through encode/decode so the wire codec is on the hot path.
class SimTransport : public Transport {
public:
    void register_server(const std::string& id, EnvelopeHandler handler);
    void set_fault_plan(FaultPlan plan);

    std::unique_ptr<Connection> dial(const ServerAddress& address, std::uint64_t round) override;

private:
    std::map<std::string, EnvelopeHandler> handlers_;
    FaultPlan plan_;
    std::mutex mutex_;
};

/// Blocking TCP transport with a fixed dial/IO timeout.
class TcpTransport : public Transport {
public:
    explicit TcpTransport(double timeout_seconds = 2.0);
    std::unique_ptr<Connection> dial(const ServerAddress& address, std::uint64_t round) override;

private:
    double timeout_seconds_;
};

/// Accepts framed requests on a port and answers them with `handler`.
class TcpListener {
public:
    TcpListener(std::uint16_t port, EnvelopeHandler handler);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Failover client (server scan in configured list order)

struct DeliveryResult {
    std::string delivered_to;
};

/// Try each server in order; deliver the update to the first one that
/// accepts and acks. Throws AllServersUnreachable with the message
/// "Failed to connect to all servers." when the scan exhausts the list.
DeliveryResult connect_with_failover(Transport& transport,
                                     const std::vector<ServerAddress>& servers,
                                     const ClientUpdate& update, std::uint64_t round);

/// Same scan, fetching the current global model instead of delivering.
GlobalModel fetch_model_with_failover(Transport& transport,
                                      const std::vector<ServerAddress>& servers,
                                      const std::string& client_id, std::uint64_t round);

struct ClientRoundRecord {
    std::uint64_t round = 0;                    // 1-based experiment round
    std::optional<std::string> delivered_to;    // absent when the scan failed
    double local_final_loss = 0.0;
    std::string failure;                        // failure message when undelivered
};

} // namespace fed
