#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fed/data.hpp"

using namespace fed;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "fed_data_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

const char* kHeader =
    "Connection ID,Recharge Start Time (local),Recharge End Time (local),"
    "Recharge duration (hours:minutes),Connector used,Start State of charge (%),"
    "End State of charge (%),Total kWh,Station\n";

std::string valid_row(const std::string& id) {
    return id + ",01/01/2020 11:05,01/01/2020 11:12,0:07,J1772,4,80,0.77,NBA-10008\n";
}

// 3x3 least squares on the raw design [duration, soc_delta, 1]: the
// independent recovery oracle for the synthetic ground truth.
std::array<double, 3> fit_raw_least_squares(const std::vector<RawEvent>& events) {
    double ata[3][3] = {};
    double atb[3] = {};
    for (const auto& e : events) {
        const double x[3] = {static_cast<double>(e.duration_minutes),
                             static_cast<double>(e.end_soc_pct - e.start_soc_pct), 1.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) ata[i][j] += x[i] * x[j];
            atb[i] += x[i] * e.total_kwh;
        }
    }
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
        }
        std::swap(ata[col], ata[pivot]);
        std::swap(atb[col], atb[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = ata[r][col] / ata[col][col];
            for (int c = 0; c < 3; ++c) ata[r][c] -= f * ata[col][c];
            atb[r] -= f * atb[col];
        }
    }
    return {atb[0] / ata[0][0], atb[1] / ata[1][1], atb[2] / ata[2][2]};
}

} // namespace

TEST_CASE("load_csv drops and counts bad rows") {
    const auto path = temp_file("events.csv");
    std::string csv = kHeader;
    csv += valid_row("a");
    csv += valid_row("b");
    csv += valid_row("c");
    csv += valid_row("a");  // duplicate connection id
    csv += "d,01/01/2020 12:00,01/01/2020 11:00,1:00,J1772,10,50,1.0,NBA-1\n";  // end < start
    csv += "e,01/01/2020 12:00,01/01/2020 13:00,1:00,J1772,10,150,1.0,NBA-1\n"; // soc > 100
    csv += ",01/01/2020 12:00,01/01/2020 13:00,1:00,J1772,10,50,1.0,NBA-1\n";   // no id
    write_file(path, csv);

    const auto result = load_csv(path.string());
    CHECK(result.events.size() == 3);
    CHECK(result.report.duplicates == 1);
    CHECK(result.report.invalid_time == 1);
    CHECK(result.report.invalid_soc == 1);
    CHECK(result.report.missing_fields == 1);
    CHECK(result.events[0].duration_minutes == 7);
    CHECK(result.events[0].total_kwh == doctest::Approx(0.77));
}

TEST_CASE("header-only file yields empty list and empty report") {
    const auto path = temp_file("empty.csv");
    write_file(path, kHeader);
    const auto result = load_csv(path.string());
    CHECK(result.events.empty());
    CHECK(result.report.dropped() == 0);
}

TEST_CASE("missing mandatory column raises MalformedHeader") {
    const auto path = temp_file("bad_header.csv");
    write_file(path, "Connection ID,Station\nx,NBA-1\n");
    CHECK_THROWS_AS(load_csv(path.string()), MalformedHeader);
    CHECK_THROWS_AS(load_csv("/does/not/exist.csv"), FileNotFound);
}

TEST_CASE("schema mapping renames nonstandard headers") {
    const auto path = temp_file("renamed.csv");
    std::string csv =
        "conn,Recharge Start Time (local),Recharge End Time (local),"
        "Recharge duration (hours:minutes),Connector used,Start State of charge (%),"
        "End State of charge (%),kwh,Station\n";
    csv += "a,01/01/2020 11:05,01/01/2020 11:12,0:07,J1772,4,80,0.77,NBA-10008\n";
    write_file(path, csv);
    SchemaMapping schema{{"connection_id", "conn"}, {"total_kwh", "kwh"}};
    const auto result = load_csv(path.string(), schema);
    REQUIRE(result.events.size() == 1);
    CHECK(result.events[0].connection_id == "a");
}

TEST_CASE("one-hot encoding of connector and calendar features") {
    RawEvent e;
    e.connection_id = "a";
    // 04/01/2020 was a Saturday; 11:05 is morning.
    e.start_time = 1578135900;  // 2020-01-04 11:05 UTC
    e.end_time = e.start_time + 600;
    e.duration_minutes = 10;
    e.connector = "J1772";
    e.start_soc_pct = 4;
    e.end_soc_pct = 80;
    e.total_kwh = 0.77;
    e.station = "NBA-1";
    e.region = "r1";

    RawEvent f = e;
    f.connection_id = "b";
    f.connector = "CHAdeMO";
    f.duration_minutes = 60;
    f.start_time = 1578178800;  // 2020-01-04 23:00 UTC, evening
    f.end_time = f.start_time + 3600;

    const auto ds = encode({e, f});
    const auto& names = ds.feature_names;
    auto col = [&](const std::string& n) {
        return static_cast<std::size_t>(
            std::find(names.begin(), names.end(), n) - names.begin());
    };
    // vocabulary {CHAdeMO, J1772} sorted: e gets indicator [0,1]
    CHECK(ds.features.at(0, col("connector=CHAdeMO")) == 0.0);
    CHECK(ds.features.at(0, col("connector=J1772")) == 1.0);
    CHECK(ds.features.at(1, col("connector=CHAdeMO")) == 1.0);
    // Saturday -> weekend indicator
    CHECK(ds.features.at(0, col("daytype=weekend")) == 1.0);
    CHECK(ds.features.at(0, col("daytype=weekday")) == 0.0);
    CHECK(ds.features.at(0, col("period=morning")) == 1.0);
    CHECK(ds.features.at(1, col("period=evening")) == 1.0);
    // duration 10 is the corpus minimum -> scaled 0; 60 is max -> 1.
    CHECK(ds.features.at(0, col("duration_minutes")) == 0.0);
    CHECK(ds.features.at(1, col("duration_minutes")) == 1.0);
    CHECK(ds.targets[0] == doctest::Approx(0.77));
}

TEST_CASE("encode rejects empty input") {
    CHECK_THROWS_AS(encode({}), EmptyInput);
}

TEST_CASE("partition preserves rows and shares feature names") {
    SyntheticSpec spec;
    spec.rows_per_region = 20;
    spec.regions = 9;
    spec.seed = 5;
    const auto events = generate_synthetic(spec);
    std::vector<std::string> regions;
    for (std::size_t r = 0; r < 9; ++r) regions.push_back(SyntheticTruth::region_name(r));

    const auto parts = partition_by_region(events, regions);
    CHECK(parts.size() == 9);
    std::size_t total = 0;
    for (const auto& [region, ds] : parts) {
        total += ds.row_count();
        CHECK(ds.feature_names == parts.begin()->second.feature_names);
        CHECK(ds.region == region);
    }
    CHECK(total == events.size());
}

TEST_CASE("partition rejects events outside the region list") {
    SyntheticSpec spec;
    spec.rows_per_region = 2;
    spec.regions = 2;
    const auto events = generate_synthetic(spec);
    CHECK_THROWS_AS(partition_by_region(events, {"region1"}), UnknownRegion);
}

TEST_CASE("degenerate spread: all events in one region") {
    SyntheticSpec spec;
    spec.rows_per_region = 10;
    spec.regions = 1;
    const auto events = generate_synthetic(spec);
    const auto parts = partition_by_region(events, {"region1", "ghost"});
    CHECK(parts.size() == 1);
    CHECK(parts.count("region1") == 1);
}

TEST_CASE("synthetic generation is deterministic and correctly sized") {
    SyntheticSpec spec;
    spec.rows_per_region = 100;
    spec.regions = 9;
    spec.seed = 77;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a == b);
    CHECK(a.size() == 900);
    std::set<std::string> regions;
    for (const auto& e : a) regions.insert(e.region);
    CHECK(regions.size() == 9);
}

TEST_CASE("noise-free synthetic data recovers the ground truth by least squares") {
    SyntheticSpec spec;
    spec.rows_per_region = 150;
    spec.regions = 3;
    spec.noise_std = 0.0;
    spec.seed = 9;
    const auto events = generate_synthetic(spec);
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<RawEvent> region_events;
        for (const auto& e : events) {
            if (e.region == SyntheticTruth::region_name(r)) region_events.push_back(e);
        }
        const auto fit = fit_raw_least_squares(region_events);
        CHECK(std::abs(fit[0] - SyntheticTruth::kwh_per_minute) < 1e-6);
        CHECK(std::abs(fit[1] - SyntheticTruth::kwh_per_soc_pct) < 1e-6);
        CHECK(std::abs(fit[2] - SyntheticTruth::region_offset(r)) < 1e-6);
    }
}

TEST_CASE("events CSV round-trips through the writer and loader") {
    SyntheticSpec spec;
    spec.rows_per_region = 25;
    spec.regions = 2;
    spec.seed = 3;
    auto events = generate_synthetic(spec);
    const auto events_path = temp_file("roundtrip.csv");
    const auto regions_path = temp_file("regions.csv");
    write_events_csv(events, events_path.string());
    write_region_map_csv(events, regions_path.string());

    auto loaded = load_csv(events_path.string());
    CHECK(loaded.report.dropped() == 0);
    apply_region_map(loaded.events, load_region_map(regions_path.string()));
    REQUIRE(loaded.events.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(loaded.events[i].connection_id == events[i].connection_id);
        CHECK(loaded.events[i].start_time == events[i].start_time);
        CHECK(loaded.events[i].duration_minutes == events[i].duration_minutes);
        CHECK(loaded.events[i].total_kwh == events[i].total_kwh);
        CHECK(loaded.events[i].region == events[i].region);
    }
}

TEST_CASE("encode is order-stable") {
    SyntheticSpec spec;
    spec.rows_per_region = 30;
    spec.regions = 2;
    spec.seed = 21;
    auto events = generate_synthetic(spec);
    const auto enc_spec = build_encoder(events);
    const auto forward = encode(events, enc_spec);
    std::reverse(events.begin(), events.end());
    const auto reversed = encode(events, enc_spec);
    CHECK(forward.feature_names == reversed.feature_names);
    const std::size_t n = events.size();
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(forward.targets[i] == reversed.targets[n - 1 - i]);
        for (std::size_t c = 0; c < forward.feature_count(); ++c) {
            CHECK(forward.features.at(i, c) == reversed.features.at(n - 1 - i, c));
        }
    }
}
