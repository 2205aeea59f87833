#include <fstream>
#include <nlohmann/json.hpp>

#include "fed/harness.hpp"

namespace fed {

using nlohmann::json;

namespace {

std::string assignment_to_string(Assignment a) {
    switch (a) {
    case Assignment::Shared: return "shared";
    case Assignment::Disjoint: return "disjoint";
    case Assignment::Explicit: return "explicit";
    }
    return "shared";
}

Assignment assignment_from_string(const std::string& s) {
    if (s == "shared") return Assignment::Shared;
    if (s == "disjoint") return Assignment::Disjoint;
    if (s == "explicit") return Assignment::Explicit;
    throw InvalidConfig("unknown assignment: " + s);
}

json server_to_json(const ServerSpec& s) {
    return json{{"id", s.id},
                {"endpoint", s.endpoint},
                {"strategy", to_string(s.aggregator.strategy)},
                {"update_mode", to_string(s.aggregator.update_mode)},
                {"eta", s.aggregator.eta},
                {"beta1", s.aggregator.beta1},
                {"beta2", s.aggregator.beta2},
                {"epsilon", s.aggregator.epsilon},
                {"momentum", s.aggregator.momentum},
                {"quorum", s.quorum}};
}

ServerSpec server_from_json(const json& j) {
    ServerSpec s;
    s.id = j.at("id").get<std::string>();
    s.endpoint = j.value("endpoint", std::string("sim"));
    const auto strategy = strategy_from_string(j.value("strategy", std::string("fedavg")));
    const auto mode = update_mode_from_string(j.value("update_mode", std::string("replace")));
    s.aggregator = AggregatorConfig::defaults(strategy, mode);
    if (j.contains("eta")) s.aggregator.eta = j["eta"].get<double>();
    if (j.contains("beta1")) s.aggregator.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) s.aggregator.beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) s.aggregator.epsilon = j["epsilon"].get<double>();
    if (j.contains("momentum")) s.aggregator.momentum = j["momentum"].get<double>();
    s.quorum = j.value("quorum", std::size_t{0});
    return s;
}

json fault_window_to_json(const FaultWindow& w) {
    json j{{"server", w.server_id},
           {"from_round", w.from_round},
           {"mode", w.mode == FaultMode::Refuse ? "refuse" : "drop"}};
    if (w.to_round) j["to_round"] = *w.to_round;
    return j;
}

FaultWindow fault_window_from_json(const json& j) {
    FaultWindow w;
    w.server_id = j.at("server").get<std::string>();
    w.from_round = j.value("from_round", std::uint64_t{1});
    if (j.contains("to_round") && !j["to_round"].is_null()) {
        w.to_round = j["to_round"].get<std::uint64_t>();
    }
    const std::string mode = j.value("mode", std::string("refuse"));
    if (mode == "refuse") {
        w.mode = FaultMode::Refuse;
    } else if (mode == "drop") {
        w.mode = FaultMode::DropMidMessage;
    } else {
        throw InvalidConfig("unknown fault mode: " + mode);
    }
    return w;
}

} // namespace

void ExperimentConfig::validate() const {
    if (servers.empty()) {
        throw TopologyError("at least one server is required");
    }
    if (!csv && (synthetic.regions < 1 || synthetic.rows_per_region < 1)) {
        throw InvalidConfig("synthetic spec needs regions >= 1 and rows_per_region >= 1");
    }
    train.validate();
    if (rounds < 1) {
        throw InvalidConfig("rounds must be >= 1");
    }
    if (!(eval_fraction > 0.0) || eval_fraction >= 1.0) {
        throw InvalidConfig("eval_fraction must lie in (0,1)");
    }
    fault_plan.validate();
    for (const auto& s : servers) {
        s.aggregator.validate();
    }
    if (assignment == Assignment::Explicit && explicit_assignment.empty()) {
        throw TopologyError("explicit assignment requires a client->servers map");
    }
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + ex.what());
    }
    try {
        ExperimentConfig cfg;
        if (j.contains("data")) {
            const json& data = j["data"];
            if (data.contains("csv")) {
                CsvSource src;
                src.events_path = data["csv"].at("events").get<std::string>();
                src.region_map_path = data["csv"].at("region_map").get<std::string>();
                src.schema_path = data["csv"].value("schema", std::string{});
                cfg.csv = std::move(src);
            }
            if (data.contains("synthetic")) {
                const json& syn = data["synthetic"];
                cfg.synthetic.rows_per_region = syn.value("rows_per_region", std::size_t{200});
                cfg.synthetic.regions = syn.value("regions", std::size_t{9});
                cfg.synthetic.noise_std = syn.value("noise_std", 0.05);
            }
        }
        if (j.contains("topology")) {
            const json& topo = j["topology"];
            for (const auto& s : topo.at("servers")) {
                cfg.servers.push_back(server_from_json(s));
            }
            if (topo.contains("assignment")) {
                if (topo["assignment"].is_string()) {
                    cfg.assignment = assignment_from_string(topo["assignment"].get<std::string>());
                } else {
                    cfg.assignment = Assignment::Explicit;
                    for (auto it = topo["assignment"].begin(); it != topo["assignment"].end(); ++it) {
                        cfg.explicit_assignment[it.key()] =
                            it.value().get<std::vector<std::string>>();
                    }
                }
            }
        }
        if (j.contains("train")) {
            cfg.train.epochs = j["train"].value("epochs", std::uint32_t{25});
            cfg.train.learning_rate = j["train"].value("learning_rate", 0.01);
            cfg.train.seed = j["train"].value("seed", std::uint64_t{0});
        }
        cfg.rounds = j.value("rounds", std::uint64_t{3});
        if (j.contains("fault_plan")) {
            for (const auto& w : j["fault_plan"]) {
                cfg.fault_plan.windows.push_back(fault_window_from_json(w));
            }
        }
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.eval_fraction = j.value("eval_fraction", 0.1);
        cfg.output_dir = j.value("output_dir", std::string{});
        cfg.validate();
        return cfg;
    } catch (const json::exception& ex) {
        throw InvalidConfig(std::string("bad config field: ") + ex.what());
    }
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound("config file not found: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json_text(const ExperimentConfig& config) {
    json j;
    if (config.csv) {
        j["data"]["csv"] = {{"events", config.csv->events_path},
                            {"region_map", config.csv->region_map_path}};
        if (!config.csv->schema_path.empty()) {
            j["data"]["csv"]["schema"] = config.csv->schema_path;
        }
    } else {
        j["data"]["synthetic"] = {{"rows_per_region", config.synthetic.rows_per_region},
                                  {"regions", config.synthetic.regions},
                                  {"noise_std", config.synthetic.noise_std}};
    }
    json servers = json::array();
    for (const auto& s : config.servers) servers.push_back(server_to_json(s));
    j["topology"]["servers"] = std::move(servers);
    if (config.assignment == Assignment::Explicit) {
        json map = json::object();
        for (const auto& [client, ids] : config.explicit_assignment) map[client] = ids;
        j["topology"]["assignment"] = std::move(map);
    } else {
        j["topology"]["assignment"] = assignment_to_string(config.assignment);
    }
    j["train"] = {{"epochs", config.train.epochs},
                  {"learning_rate", config.train.learning_rate},
                  {"seed", config.train.seed}};
    j["rounds"] = config.rounds;
    if (!config.fault_plan.empty()) {
        json plan = json::array();
        for (const auto& w : config.fault_plan.windows) plan.push_back(fault_window_to_json(w));
        j["fault_plan"] = std::move(plan);
    }
    j["seed"] = config.seed;
    j["eval_fraction"] = config.eval_fraction;
    if (!config.output_dir.empty()) j["output_dir"] = config.output_dir;
    return j.dump(2) + "\n";
}

} // namespace fed
