#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fed/harness.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::string out_dir, const std::string& listen_id, const std::string& join_id) {
    fed::ExperimentConfig config = fed::config_from_file(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) config.output_dir = "out";

    if (!listen_id.empty()) {
        const auto records = fed::serve(config, listen_id);
        for (const auto& rec : records) {
            std::printf("round %llu: %s, eval_loss=%g, participants=%zu\n",
                        static_cast<unsigned long long>(rec.round),
                        rec.aggregated ? "aggregated" : "quorum not met", rec.eval_loss,
                        rec.participants.size());
        }
        return 0;
    }
    if (!join_id.empty()) {
        const auto records = fed::join(config, join_id);
        for (const auto& rec : records) {
            std::printf("round %llu: %s\n", static_cast<unsigned long long>(rec.round),
                        rec.delivered_to ? ("delivered to " + *rec.delivered_to).c_str()
                                         : rec.failure.c_str());
        }
        return 0;
    }

    const fed::MetricsBundle bundle = fed::run_experiment(config);
    fed::export_bundle(bundle, config.output_dir);
    for (const auto& srv : bundle.servers) {
        for (const auto& rec : srv.records) {
            std::printf("%s round %llu: eval_loss=%g (%s, %zu participants)\n",
                        srv.server_id.c_str(), static_cast<unsigned long long>(rec.round),
                        rec.eval_loss, rec.aggregated ? "aggregated" : "carried forward",
                        rec.participants.size());
        }
    }
    std::printf("exports written to %s (%.2fs)\n", config.output_dir.c_str(),
                bundle.wall_seconds);
    return 0;
}

int compare_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                    std::string out_dir) {
    fed::ExperimentConfig multi_cfg = fed::config_from_file(config_path);
    if (seed) multi_cfg.seed = *seed;
    if (multi_cfg.servers.size() < 2) {
        throw fed::TopologyError("compare needs a config with at least two servers");
    }
    fed::ExperimentConfig single_cfg = multi_cfg;
    single_cfg.servers = {multi_cfg.servers.front()};
    single_cfg.assignment = fed::Assignment::Shared;
    single_cfg.explicit_assignment.clear();

    const fed::MetricsBundle multi = fed::run_experiment(multi_cfg);
    const fed::MetricsBundle single = fed::run_experiment(single_cfg);
    const fed::CompareResult result = fed::compare(multi, single);

    for (std::size_t r = 0; r < result.per_round_gaps.size(); ++r) {
        std::printf("round %zu: relative gap %g\n", r + 1, result.per_round_gaps[r]);
    }
    std::printf("final relative loss gap: %g\n", result.relative_final_loss_gap);
    if (!out_dir.empty()) {
        fed::export_bundle(multi, out_dir + "/multi");
        fed::export_bundle(single, out_dir + "/single");
    }
    return 0;
}

int gen_data_command(std::size_t rows, std::size_t regions, double noise, std::uint64_t seed,
                     const std::string& events_out, const std::string& regions_out) {
    fed::SyntheticSpec spec;
    spec.rows_per_region = rows;
    spec.regions = regions;
    spec.noise_std = noise;
    spec.seed = seed;
    const auto events = fed::generate_synthetic(spec);
    fed::write_events_csv(events, events_out);
    if (!regions_out.empty()) {
        fed::write_region_map_csv(events, regions_out);
    }
    std::printf("wrote %zu events to %s\n", events.size(), events_out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-global-server federated learning harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, listen_id, join_id;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Output directory for CSV exports");
    run->add_option("--listen", listen_id, "Host only this server on its TCP endpoint");
    run->add_option("--join", join_id, "Run only this client against TCP servers");

    auto* cmp = app.add_subcommand("compare", "Multi-server vs single-server comparison");
    cmp->add_option("--config", config_path, "Multi-server config (JSON)")->required();
    cmp->add_option("--seed", seed, "Override the config seed");
    cmp->add_option("--out", out_dir, "Directory for both runs' exports");

    std::size_t rows = 200, regions = 9;
    double noise = 0.05;
    std::uint64_t gen_seed = 0;
    std::string events_out = "events.csv", regions_out;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic EV events corpus");
    gen->add_option("--rows", rows, "Rows per region");
    gen->add_option("--regions", regions, "Number of regions");
    gen->add_option("--noise", noise, "Gaussian noise stddev on the target");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", events_out, "Events CSV path");
    gen->add_option("--regions-out", regions_out, "station,region mapping CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(config_path, seed, out_dir, listen_id, join_id);
        }
        if (cmp->parsed()) {
            return compare_command(config_path, seed, out_dir);
        }
        return gen_data_command(rows, regions, noise, gen_seed, events_out, regions_out);
    } catch (const fed::InvalidConfig& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 1;
    } catch (const fed::TopologyError& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 1;
    } catch (const fed::FileNotFound& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 1;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
}
