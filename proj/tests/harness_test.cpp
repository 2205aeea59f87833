#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "fed/harness.hpp"

using namespace fed;

namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.synthetic.rows_per_region = 40;
    cfg.synthetic.regions = 4;
    cfg.synthetic.noise_std = 0.05;
    cfg.servers = {ServerSpec{"gs1"}, ServerSpec{"gs2"}};
    cfg.train.epochs = 5;
    cfg.rounds = 3;
    cfg.seed = 11;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "fed_harness_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("config JSON round-trips through text") {
    auto cfg = small_config();
    cfg.servers[1].aggregator = AggregatorConfig::defaults(Strategy::FedYogi);
    cfg.servers[1].quorum = 2;
    cfg.fault_plan.windows = {FaultWindow{"gs1", 2, 2, FaultMode::Refuse}};
    cfg.eval_fraction = 0.2;
    cfg.output_dir = "out";

    const auto text = config_to_json_text(cfg);
    const auto back = config_from_json_text(text);
    CHECK(back.servers == cfg.servers);
    CHECK(back.assignment == cfg.assignment);
    CHECK(back.rounds == cfg.rounds);
    CHECK(back.seed == cfg.seed);
    CHECK(back.eval_fraction == cfg.eval_fraction);
    CHECK(back.output_dir == cfg.output_dir);
    CHECK(back.synthetic.rows_per_region == cfg.synthetic.rows_per_region);
    REQUIRE(back.fault_plan.windows.size() == 1);
    CHECK(back.fault_plan.windows[0].server_id == "gs1");
    CHECK(back.fault_plan.windows[0].to_round == 2);
    // A second round trip is textually stable.
    CHECK(config_to_json_text(back) == text);
}

TEST_CASE("config parser diagnoses bad input") {
    CHECK_THROWS_AS(config_from_json_text("not json"), InvalidConfig);
    CHECK_THROWS_AS(config_from_json_text("{}"), TopologyError);  // no servers
    CHECK_THROWS_AS(config_from_json_text(
                        R"({"topology":{"servers":[{"id":"gs1"}],"assignment":"sideways"}})"),
                    InvalidConfig);
    CHECK_THROWS_AS(config_from_file("/no/such/config.json"), FileNotFound);
}

TEST_CASE("explicit assignment must cover every client with known servers") {
    auto cfg = small_config();
    cfg.assignment = Assignment::Explicit;
    CHECK_THROWS_AS(cfg.validate(), TopologyError);

    cfg.explicit_assignment = {{"region1", {"gs1"}}};  // regions 2..4 unassigned
    CHECK_THROWS_AS(run_experiment(cfg), TopologyError);

    cfg.explicit_assignment = {{"region1", {"ghost"}},
                               {"region2", {"gs1"}},
                               {"region3", {"gs1"}},
                               {"region4", {"gs1"}}};
    CHECK_THROWS_AS(run_experiment(cfg), TopologyError);
}

TEST_CASE("a shared run produces the expected record shape") {
    const auto cfg = small_config();
    const auto bundle = run_experiment(cfg);

    // 4 clients x 3 rounds of training and delivery entries.
    CHECK(bundle.training.size() == 12);
    CHECK(bundle.deliveries.size() == 12);
    REQUIRE(bundle.servers.size() == 2);
    for (const auto& srv : bundle.servers) {
        REQUIRE(srv.records.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(srv.records[i].round == i + 1);
            CHECK(srv.records[i].eval_loss > 0.0);
            // With both servers healthy the ordered scan always stops at
            // gs1, so only gs1 ever meets its quorum.
            CHECK(srv.records[i].aggregated == (srv.server_id == "gs1"));
        }
    }
    for (const auto& t : bundle.training) {
        CHECK(t.report.loss_per_epoch.size() == cfg.train.epochs);
    }
    // Shared topology, no faults: everything lands on the first server.
    for (const auto& d : bundle.deliveries) {
        CHECK(d.delivered_to == "gs1");
    }
}

TEST_CASE("every delivery is attributed to exactly one server or FAILED") {
    auto cfg = small_config();
    cfg.fault_plan.windows = {FaultWindow{"gs1", 2, 2, FaultMode::Refuse}};
    const auto bundle = run_experiment(cfg);
    std::set<std::string> known{"gs1", "gs2"};
    std::size_t round2_on_gs2 = 0;
    for (const auto& d : bundle.deliveries) {
        REQUIRE(d.delivered_to);
        CHECK(known.count(*d.delivered_to) == 1);
        if (d.round == 2) {
            CHECK(*d.delivered_to == "gs2");
            ++round2_on_gs2;
        } else {
            CHECK(*d.delivered_to == "gs1");
        }
    }
    CHECK(round2_on_gs2 == 4);
    // gs1 missed round 2, so its second record is a failed round.
    for (const auto& srv : bundle.servers) {
        if (srv.server_id == "gs1") {
            CHECK_FALSE(srv.records[1].aggregated);
            CHECK(srv.records[1].eval_loss == srv.records[0].eval_loss);
        }
        if (srv.server_id == "gs2") {
            CHECK(srv.records[1].aggregated);
        }
    }
}

TEST_CASE("disjoint assignment splits clients round-robin") {
    auto cfg = small_config();
    cfg.assignment = Assignment::Disjoint;
    const auto bundle = run_experiment(cfg);
    std::map<std::string, std::set<std::string>> clients_by_server;
    for (const auto& d : bundle.deliveries) {
        REQUIRE(d.delivered_to);
        clients_by_server[*d.delivered_to].insert(d.client_id);
    }
    CHECK(clients_by_server["gs1"] == std::set<std::string>{"region1", "region3"});
    CHECK(clients_by_server["gs2"] == std::set<std::string>{"region2", "region4"});
}

TEST_CASE("equal seeds give byte-identical exports") {
    const auto cfg = small_config();
    const auto dir_a = temp_dir("run_a");
    const auto dir_b = temp_dir("run_b");
    export_bundle(run_experiment(cfg), dir_a.string());
    export_bundle(run_experiment(cfg), dir_b.string());
    for (const char* name : {"client_loss.csv", "server_loss.csv", "delivery.csv", "config.json"}) {
        CAPTURE(name);
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
}

TEST_CASE("export files carry the pinned headers") {
    const auto dir = temp_dir("headers");
    export_bundle(run_experiment(small_config()), dir.string());
    auto first_line = [&](const char* name) {
        const auto text = slurp(dir / name);
        return text.substr(0, text.find('\n'));
    };
    CHECK(first_line("client_loss.csv") == "client_id,round,epoch,loss");
    CHECK(first_line("server_loss.csv") == "server_id,round,eval_loss");
    CHECK(first_line("delivery.csv") == "client_id,round,delivered_to");
    // The snapshot parses back to a valid config.
    config_from_json_text(slurp(dir / "config.json"));
}

TEST_CASE("single server equals a two-server run whose second server is never reached") {
    auto single = small_config();
    single.servers = {ServerSpec{"gs1"}};
    auto shadowed = small_config();  // gs1 + gs2, gs2 never dialed

    const auto a = run_experiment(single);
    const auto b = run_experiment(shadowed);
    const auto gap = compare(b, a);
    CHECK(gap.relative_final_loss_gap == 0.0);
    for (double g : gap.per_round_gaps) CHECK(g == 0.0);

    // gs1's records agree bitwise between the two runs.
    CHECK(a.servers[0].records == b.servers[0].records);
}

TEST_CASE("compare rejects mismatched round counts") {
    auto cfg = small_config();
    const auto three = run_experiment(cfg);
    cfg.rounds = 2;
    const auto two = run_experiment(cfg);
    CHECK_THROWS_AS(compare(three, two), MismatchedConfigs);
}

TEST_CASE("a run compared with itself has zero gap everywhere") {
    const auto bundle = run_experiment(small_config());
    const auto gap = compare(bundle, bundle);
    CHECK(gap.relative_final_loss_gap == 0.0);
    for (double g : gap.per_round_gaps) CHECK(g == 0.0);
}

TEST_CASE("eval loss falls over rounds on the default synthetic task") {
    const auto bundle = run_experiment(small_config());
    const auto history = eval_history(bundle.servers[0].records);
    REQUIRE(history.size() == 3);
    CHECK(history.back().second < history.front().second);
}
