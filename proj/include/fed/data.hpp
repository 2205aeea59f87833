#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fed/errors.hpp"

namespace fed {

/// One cleaned EV recharge event. Timestamps are UTC epoch seconds.
struct RawEvent {
    std::string connection_id;
    std::int64_t start_time = 0;
    std::int64_t end_time = 0;
    std::int64_t duration_minutes = 0;
    std::string connector;
    int start_soc_pct = 0;
    int end_soc_pct = 0;
    double total_kwh = 0.0;
    std::string station;
    std::string region;

    bool valid() const;
    bool operator==(const RawEvent&) const = default;
};

/// Row-major feature matrix.
struct Matrix {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

/// One client's encoded training data. feature_names ordering is
/// identical across every client in a federation.
struct ClientDataset {
    Matrix features;
    std::vector<double> targets;
    std::vector<std::string> feature_names;
    std::string region;

    std::size_t row_count() const { return features.rows; }
    std::size_t feature_count() const { return features.cols; }
};

struct CleaningReport {
    std::size_t parsed = 0;
    std::size_t duplicates = 0;
    std::size_t invalid_time = 0;
    std::size_t invalid_soc = 0;
    std::size_t invalid_value = 0;
    std::size_t missing_fields = 0;
    std::size_t malformed_rows = 0;

    std::size_t dropped() const {
        return duplicates + invalid_time + invalid_soc + invalid_value + missing_fields +
               malformed_rows;
    }
};

struct LoadResult {
    std::vector<RawEvent> events;
    CleaningReport report;
};

/// Optional header renames, canonical name -> actual header text.
/// Canonical names: connection_id, start_time, end_time, duration,
/// connector, start_soc, end_soc, total_kwh, station.
using SchemaMapping = std::map<std::string, std::string>;

SchemaMapping load_schema_mapping(const std::string& path);

/// Parse an events CSV laid out like the EV recharge export. Rows that
/// violate invariants are dropped and counted, never silently lost.
LoadResult load_csv(const std::string& path, const SchemaMapping& schema = {});

/// station,region CSV.
std::map<std::string, std::string> load_region_map(const std::string& path);

/// Fill each event's region from a station -> region map.
void apply_region_map(std::vector<RawEvent>& events,
                      const std::map<std::string, std::string>& station_to_region);

/// Frozen encoding decision: categorical vocabularies plus numeric
/// min/max ranges, computed once over the whole corpus so that every
/// partition shares the same feature geometry.
struct EncoderSpec {
    std::vector<std::string> connectors;  // sorted
    std::vector<std::string> regions;     // sorted
    double duration_min = 0.0, duration_max = 0.0;
    double start_soc_min = 0.0, start_soc_max = 0.0;
    double end_soc_min = 0.0, end_soc_max = 0.0;

    std::vector<std::string> feature_names() const;
};

EncoderSpec build_encoder(const std::vector<RawEvent>& events);

ClientDataset encode(const std::vector<RawEvent>& events, const EncoderSpec& spec);
ClientDataset encode(const std::vector<RawEvent>& events);

/// Split into per-region datasets sharing one global encoder.
std::map<std::string, ClientDataset> partition_by_region(const std::vector<RawEvent>& events,
                                                         const std::vector<std::string>& regions);

/// Same split against a caller-supplied encoder, for use when the
/// vocabulary must also cover rows held out of the partition.
std::map<std::string, ClientDataset> partition_by_region(const std::vector<RawEvent>& events,
                                                         const std::vector<std::string>& regions,
                                                         const EncoderSpec& spec);

struct SyntheticSpec {
    std::size_t rows_per_region = 200;
    std::size_t regions = 9;
    double noise_std = 0.05;
    std::uint64_t seed = 0;
};

/// Ground-truth linear model behind generate_synthetic:
/// total_kwh = kwh_per_minute * duration + kwh_per_soc_pct * (end - start) + region offset.
/// The offsets sit at -(15 * kwh_per_minute + 10 * kwh_per_soc_pct) plus a
/// small per-region spread, so total_kwh = a*(duration-15) + b*(dsoc-10) + spread,
/// which is non-negative for every generated session (duration >= 15, dsoc >= 10).
struct SyntheticTruth {
    static constexpr double kwh_per_minute = 0.006;
    static constexpr double kwh_per_soc_pct = 0.01;
    static double region_offset(std::size_t region_index) {
        return -(15.0 * kwh_per_minute + 10.0 * kwh_per_soc_pct) +
               0.002 * static_cast<double>(region_index);
    }
    static std::string region_name(std::size_t region_index) {
        return "region" + std::to_string(region_index + 1);
    }
};

std::vector<RawEvent> generate_synthetic(const SyntheticSpec& spec);

/// Write events in the same column layout load_csv reads, so generated
/// corpora can be re-ingested through the normal import path.
void write_events_csv(const std::vector<RawEvent>& events, const std::string& path);

/// Write the station,region mapping implied by a list of events.
void write_region_map_csv(const std::vector<RawEvent>& events, const std::string& path);

/// Calendar helpers shared with tests. Weekday: 0 = Sunday.
int weekday_of(std::int64_t epoch_seconds);
int hour_of(std::int64_t epoch_seconds);

} // namespace fed
