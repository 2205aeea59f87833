#include "fed/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace fed {

namespace {

struct PreparedData {
    std::map<std::string, ClientDataset> by_region;  // training partitions
    ClientDataset eval_dataset;
    std::vector<std::string> regions;  // sorted
    double mean_target = 0.0;  // over the training rows
};

PreparedData prepare_data(const ExperimentConfig& config) {
    std::vector<RawEvent> events;
    if (config.csv) {
        SchemaMapping schema;
        if (!config.csv->schema_path.empty()) {
            schema = load_schema_mapping(config.csv->schema_path);
        }
        auto loaded = load_csv(config.csv->events_path, schema);
        events = std::move(loaded.events);
        apply_region_map(events, load_region_map(config.csv->region_map_path));
    } else {
        SyntheticSpec spec = config.synthetic;
        spec.seed = config.seed;
        events = generate_synthetic(spec);
    }
    if (events.empty()) {
        throw EmptyDataset("no usable events in the data source");
    }

    std::set<std::string> region_set;
    for (const auto& e : events) region_set.insert(e.region);

    PreparedData out;
    out.regions.assign(region_set.begin(), region_set.end());

    // Held-out evaluation split, seeded. The encoder is built over the
    // full corpus so the eval split shares the clients' feature space.
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t eval_count = static_cast<std::size_t>(
        static_cast<double>(events.size()) * config.eval_fraction);
    eval_count = std::clamp<std::size_t>(eval_count, 1, events.size() - 1);

    std::vector<RawEvent> eval_events, train_events;
    eval_events.reserve(eval_count);
    train_events.reserve(events.size() - eval_count);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < eval_count ? eval_events : train_events).push_back(events[order[i]]);
    }

    const EncoderSpec spec = build_encoder(events);
    out.eval_dataset = encode(eval_events, spec);
    out.eval_dataset.region = "eval";
    out.by_region = partition_by_region(train_events, out.regions, spec);
    double target_sum = 0.0;
    for (const auto& e : train_events) target_sum += e.total_kwh;
    out.mean_target = target_sum / static_cast<double>(train_events.size());
    return out;
}

// Initial broadcast model: zero weights with the bias warm-started at the
// mean training target, so the first rounds spend their epochs on the
// feature signal instead of re-deriving the global intercept on every
// client. Every server (and every topology) starts from this same model.
GlobalModel initial_model(const PreparedData& data, const std::string& server_id) {
    std::vector<double> values(data.eval_dataset.feature_count() + 1, 0.0);
    values.back() = data.mean_target;
    return GlobalModel{ParameterVector(std::move(values)), 0, server_id};
}

struct Topology {
    // client id (= region) -> ordered scan list
    std::map<std::string, std::vector<ServerAddress>> client_servers;
    // server id -> expected client ids
    std::map<std::string, std::vector<std::string>> server_cohorts;
};

Topology build_topology(const ExperimentConfig& config, const std::vector<std::string>& clients) {
    Topology topo;
    std::map<std::string, ServerAddress> addr_by_id;
    std::vector<ServerAddress> all;
    for (const auto& s : config.servers) {
        ServerAddress a{s.id, s.endpoint};
        addr_by_id[s.id] = a;
        all.push_back(a);
        topo.server_cohorts[s.id] = {};
    }

    switch (config.assignment) {
    case Assignment::Shared:
        for (const auto& c : clients) {
            topo.client_servers[c] = all;
            for (const auto& s : config.servers) topo.server_cohorts[s.id].push_back(c);
        }
        break;
    case Assignment::Disjoint:
        for (std::size_t i = 0; i < clients.size(); ++i) {
            const auto& addr = all[i % all.size()];
            topo.client_servers[clients[i]] = {addr};
            topo.server_cohorts[addr.id].push_back(clients[i]);
        }
        break;
    case Assignment::Explicit:
        for (const auto& c : clients) {
            auto it = config.explicit_assignment.find(c);
            if (it == config.explicit_assignment.end() || it->second.empty()) {
                throw TopologyError("client " + c + " has no assigned server");
            }
            for (const auto& id : it->second) {
                auto found = addr_by_id.find(id);
                if (found == addr_by_id.end()) {
                    throw TopologyError("client " + c + " assigned to unknown server " + id);
                }
                topo.client_servers[c].push_back(found->second);
                topo.server_cohorts[id].push_back(c);
            }
        }
        break;
    }
    for (auto& [id, cohort] : topo.server_cohorts) {
        if (cohort.empty()) {
            throw TopologyError("server " + id + " has an empty cohort");
        }
        std::sort(cohort.begin(), cohort.end());
    }
    return topo;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

MetricsBundle run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    PreparedData data = prepare_data(config);
    std::vector<std::string> clients;
    for (const auto& [region, ds] : data.by_region) clients.push_back(region);
    Topology topo = build_topology(config, clients);

    const bool simulated = std::all_of(config.servers.begin(), config.servers.end(),
                                       [](const ServerSpec& s) { return s.endpoint == "sim"; });
    if (!simulated && !config.fault_plan.empty()) {
        throw InvalidConfig("fault injection requires the simulated transport");
    }

    // Logical clock: simulated servers timestamp records by round so
    // equal-seed runs are byte-identical.
    auto tick = std::make_shared<std::int64_t>(0);
    Clock sim_clock = [tick] { return *tick; };

    std::vector<std::unique_ptr<GlobalServer>> servers;
    for (const auto& spec : config.servers) {
        ServerConfig sc;
        sc.id = spec.id;
        sc.aggregator = spec.aggregator;
        sc.expected_clients = topo.server_cohorts.at(spec.id);
        sc.quorum = spec.quorum;
        sc.rounds = config.rounds;
        sc.eval_dataset = data.eval_dataset;
        servers.push_back(std::make_unique<GlobalServer>(
            std::move(sc), initial_model(data, spec.id), simulated ? sim_clock : Clock{}));
    }

    std::unique_ptr<Transport> transport;
    std::vector<std::unique_ptr<TcpListener>> listeners;
    if (simulated) {
        auto sim = std::make_unique<SimTransport>();
        for (auto& srv : servers) {
            GlobalServer* raw = srv.get();
            sim->register_server(raw->config().id,
                                 [raw](const Envelope& req) { return raw->handle(req); });
        }
        sim->set_fault_plan(config.fault_plan);
        transport = std::move(sim);
    } else {
        for (std::size_t i = 0; i < servers.size(); ++i) {
            const auto& endpoint = config.servers[i].endpoint;
            const auto colon = endpoint.rfind(':');
            if (colon == std::string::npos) {
                throw InvalidConfig("server endpoint must be host:port or 'sim': " + endpoint);
            }
            const auto port = static_cast<std::uint16_t>(std::stoi(endpoint.substr(colon + 1)));
            GlobalServer* raw = servers[i].get();
            listeners.push_back(std::make_unique<TcpListener>(
                port, [raw](const Envelope& req) { return raw->handle(req); }));
        }
        transport = std::make_unique<TcpTransport>();
    }

    std::vector<std::unique_ptr<ClientNode>> nodes;
    for (const auto& id : clients) {
        nodes.push_back(std::make_unique<ClientNode>(id, data.by_region.at(id),
                                                     topo.client_servers.at(id), config.train));
    }

    MetricsBundle bundle;
    bundle.rounds = config.rounds;
    bundle.seed = config.seed;
    bundle.config_snapshot = config_to_json_text(config);

    for (std::uint64_t round = 1; round <= config.rounds; ++round) {
        *tick = static_cast<std::int64_t>(round);
        for (auto& node : nodes) {
            const std::size_t reports_before = node->train_reports().size();
            const ClientRoundRecord record = node->run_round(round, *transport);
            if (node->train_reports().size() > reports_before) {
                bundle.training.push_back(
                    ClientRoundTraining{node->id(), round, node->train_reports().back()});
            }
            bundle.deliveries.push_back(DeliveryLogEntry{node->id(), round, record.delivered_to});
        }
        for (auto& srv : servers) {
            srv->finish_round();
        }
    }

    for (auto& listener : listeners) listener->stop();
    for (auto& srv : servers) {
        bundle.servers.push_back(ServerRun{srv->config().id, srv->records()});
    }
    bundle.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return bundle;
}

namespace {

double best_loss_at_round(const MetricsBundle& bundle, std::uint64_t round) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& srv : bundle.servers) {
        for (const auto& rec : srv.records) {
            if (rec.round == round) best = std::min(best, rec.eval_loss);
        }
    }
    return best;
}

double relative_gap(double multi, double single_loss) {
    if (single_loss == 0.0) {
        return multi == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::abs(multi - single_loss) / single_loss;
}

} // namespace

CompareResult compare(const MetricsBundle& multi, const MetricsBundle& single) {
    if (multi.rounds != single.rounds) {
        throw MismatchedConfigs("bundles ran different round counts");
    }
    if (multi.servers.empty() || single.servers.empty()) {
        throw MismatchedConfigs("bundle without server records");
    }
    CompareResult result;
    for (std::uint64_t r = 1; r <= multi.rounds; ++r) {
        result.per_round_gaps.push_back(
            relative_gap(best_loss_at_round(multi, r), best_loss_at_round(single, r)));
    }
    result.relative_final_loss_gap = result.per_round_gaps.back();
    return result;
}

std::vector<RoundRecord> serve(const ExperimentConfig& config, const std::string& server_id) {
    config.validate();
    PreparedData data = prepare_data(config);
    std::vector<std::string> clients;
    for (const auto& [region, ds] : data.by_region) clients.push_back(region);
    Topology topo = build_topology(config, clients);

    const ServerSpec* spec = nullptr;
    for (const auto& s : config.servers) {
        if (s.id == server_id) spec = &s;
    }
    if (!spec) {
        throw TopologyError("no server named " + server_id + " in the config");
    }
    const auto colon = spec->endpoint.rfind(':');
    if (colon == std::string::npos) {
        throw InvalidConfig("server endpoint must be host:port for serve mode");
    }
    const auto port = static_cast<std::uint16_t>(std::stoi(spec->endpoint.substr(colon + 1)));

    ServerConfig sc;
    sc.id = spec->id;
    sc.aggregator = spec->aggregator;
    sc.expected_clients = topo.server_cohorts.at(spec->id);
    sc.quorum = spec->quorum;
    sc.rounds = config.rounds;
    sc.eval_dataset = data.eval_dataset;
    GlobalServer server(std::move(sc), initial_model(data, spec->id));
    return run_server(server, port);
}

std::vector<ClientRoundRecord> join(const ExperimentConfig& config, const std::string& client_id) {
    config.validate();
    PreparedData data = prepare_data(config);
    std::vector<std::string> clients;
    for (const auto& [region, ds] : data.by_region) clients.push_back(region);
    Topology topo = build_topology(config, clients);
    auto it = data.by_region.find(client_id);
    if (it == data.by_region.end()) {
        throw TopologyError("no client (region) named " + client_id + " in the data");
    }
    TcpTransport transport;
    const auto& scan_list = topo.client_servers.at(client_id);
    ClientNode node(client_id, it->second, scan_list, config.train);
    for (std::uint64_t r = 1; r <= config.rounds; ++r) {
        node.run_round(r, *&transport);
        if (r == config.rounds) break;
        // Pace against the servers: wait for an aggregation (or the
        // server-side round timeout) before starting the next round.
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(12);
        while (std::chrono::steady_clock::now() < deadline) {
            try {
                const GlobalModel m = fetch_model_with_failover(transport, scan_list, client_id, r);
                if (m.round >= r) break;
            } catch (const AllServersUnreachable&) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    }
    return node.history();
}

void export_bundle(const MetricsBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output dir " + dir + ": " + ec.message());
    }
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) {
            throw IoError(std::string("cannot write ") + name + " in " + dir);
        }
        return out;
    };

    {
        auto out = open("client_loss.csv");
        out << "client_id,round,epoch,loss\n";
        for (const auto& t : bundle.training) {
            for (std::size_t e = 0; e < t.report.loss_per_epoch.size(); ++e) {
                out << t.client_id << ',' << t.round << ',' << e + 1 << ','
                    << format_double(t.report.loss_per_epoch[e]) << "\n";
            }
        }
    }
    {
        auto out = open("server_loss.csv");
        out << "server_id,round,eval_loss\n";
        for (const auto& srv : bundle.servers) {
            for (const auto& rec : srv.records) {
                out << srv.server_id << ',' << rec.round << ',' << format_double(rec.eval_loss)
                    << "\n";
            }
        }
    }
    {
        auto out = open("delivery.csv");
        out << "client_id,round,delivered_to\n";
        for (const auto& d : bundle.deliveries) {
            out << d.client_id << ',' << d.round << ','
                << (d.delivered_to ? *d.delivered_to : std::string("FAILED")) << "\n";
        }
    }
    {
        auto out = open("config.json");
        out << bundle.config_snapshot;
    }
}

} // namespace fed
