#include "fed/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace fed {

namespace {

// Days-from-civil / civil-from-days (proleptic Gregorian, UTC).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool parse_int(const std::string& s, long long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

// "dd/mm/yyyy HH:MM"
bool parse_timestamp(const std::string& s, std::int64_t& out) {
    int d, mo, y, h, mi;
    char c1, c2, sp, c3;
    std::istringstream iss(s);
    if (!(iss >> d >> c1 >> mo >> c2 >> y >> h >> c3 >> mi)) return false;
    sp = ' ';
    (void)sp;
    if (c1 != '/' || c2 != '/' || c3 != ':') return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) return false;
    out = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60;
    return true;
}

std::string format_timestamp(std::int64_t t) {
    int y, mo, d;
    civil_from_days(t / 86400, y, mo, d);
    const int secs = static_cast<int>(t % 86400);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d %02d:%02d", d, mo, y, secs / 3600,
                  (secs % 3600) / 60);
    return buf;
}

// "h:mm" duration
bool parse_duration_minutes(const std::string& s, std::int64_t& out) {
    auto colon = s.find(':');
    if (colon == std::string::npos) {
        long long v;
        if (!parse_int(s, v) || v < 0) return false;
        out = v;
        return true;
    }
    long long h, m;
    if (!parse_int(s.substr(0, colon), h) || !parse_int(s.substr(colon + 1), m)) return false;
    if (h < 0 || m < 0 || m > 59) return false;
    out = h * 60 + m;
    return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

const std::array<std::pair<const char*, const char*>, 9> kDefaultHeaders = {{
    {"connection_id", "Connection ID"},
    {"start_time", "Recharge Start Time (local)"},
    {"end_time", "Recharge End Time (local)"},
    {"duration", "Recharge duration (hours:minutes)"},
    {"connector", "Connector used"},
    {"start_soc", "Start State of charge (%)"},
    {"end_soc", "End State of charge (%)"},
    {"total_kwh", "Total kWh"},
    {"station", "Station"},
}};

constexpr const char* kPeriodNames[4] = {"afternoon", "evening", "morning", "night"};

int period_index(int hour) {
    if (hour < 6) return 3;   // night
    if (hour < 12) return 2;  // morning
    if (hour < 18) return 0;  // afternoon
    return 1;                 // evening
}

} // namespace

int weekday_of(std::int64_t epoch_seconds) {
    // 1970-01-01 was a Thursday (4).
    std::int64_t days = epoch_seconds / 86400;
    return static_cast<int>(((days % 7) + 7 + 4) % 7);
}

int hour_of(std::int64_t epoch_seconds) {
    return static_cast<int>((epoch_seconds % 86400 + 86400) % 86400) / 3600;
}

bool RawEvent::valid() const {
    return end_time >= start_time && duration_minutes >= 0 && start_soc_pct >= 0 &&
           start_soc_pct <= 100 && end_soc_pct >= 0 && end_soc_pct <= 100 && total_kwh >= 0.0;
}

SchemaMapping load_schema_mapping(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound("schema mapping not found: " + path);
    }
    SchemaMapping map;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw MalformedHeader("schema mapping line missing '=': " + line);
        }
        map[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return map;
}

LoadResult load_csv(const std::string& path, const SchemaMapping& schema) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound("events CSV not found: " + path);
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw MalformedHeader("events CSV is empty: " + path);
    }
    const auto headers = split_csv_line(header_line);
    std::map<std::string, std::size_t> col;
    for (const auto& [canon, def] : kDefaultHeaders) {
        std::string wanted = def;
        if (auto it = schema.find(canon); it != schema.end()) wanted = it->second;
        auto pos = std::find(headers.begin(), headers.end(), wanted);
        if (pos == headers.end()) {
            throw MalformedHeader("missing mandatory column '" + wanted + "' in " + path);
        }
        col[canon] = static_cast<std::size_t>(pos - headers.begin());
    }

    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field = [&](const char* name) -> std::string {
            const std::size_t i = col.at(name);
            return i < fields.size() ? trim(fields[i]) : std::string{};
        };

        RawEvent e;
        e.connection_id = field("connection_id");
        e.connector = field("connector");
        e.station = field("station");
        if (e.connection_id.empty() || e.connector.empty() || e.station.empty()) {
            ++result.report.missing_fields;
            continue;
        }
        long long start_soc, end_soc;
        double kwh;
        if (!parse_timestamp(field("start_time"), e.start_time) ||
            !parse_timestamp(field("end_time"), e.end_time) ||
            !parse_duration_minutes(field("duration"), e.duration_minutes) ||
            !parse_int(field("start_soc"), start_soc) || !parse_int(field("end_soc"), end_soc) ||
            !parse_double(field("total_kwh"), kwh)) {
            ++result.report.malformed_rows;
            continue;
        }
        e.start_soc_pct = static_cast<int>(start_soc);
        e.end_soc_pct = static_cast<int>(end_soc);
        e.total_kwh = kwh;

        if (e.end_time < e.start_time) {
            ++result.report.invalid_time;
            continue;
        }
        if (start_soc < 0 || start_soc > 100 || end_soc < 0 || end_soc > 100) {
            ++result.report.invalid_soc;
            continue;
        }
        if (kwh < 0.0 || !std::isfinite(kwh)) {
            ++result.report.invalid_value;
            continue;
        }
        if (!seen_ids.insert(e.connection_id).second) {
            ++result.report.duplicates;
            continue;
        }
        result.events.push_back(std::move(e));
        ++result.report.parsed;
    }
    return result;
}

std::map<std::string, std::string> load_region_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound("region map not found: " + path);
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw MalformedHeader("region map is empty: " + path);
    }
    std::map<std::string, std::string> map;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 2) {
            throw MalformedHeader("region map row needs station,region: " + line);
        }
        map[trim(fields[0])] = trim(fields[1]);
    }
    return map;
}

void apply_region_map(std::vector<RawEvent>& events,
                      const std::map<std::string, std::string>& station_to_region) {
    for (auto& e : events) {
        auto it = station_to_region.find(e.station);
        if (it == station_to_region.end()) {
            throw UnknownRegion("no region for station " + e.station);
        }
        e.region = it->second;
    }
}

std::vector<std::string> EncoderSpec::feature_names() const {
    std::vector<std::string> names;
    for (const auto& c : connectors) names.push_back("connector=" + c);
    names.push_back("daytype=weekday");
    names.push_back("daytype=weekend");
    for (const auto* p : kPeriodNames) names.push_back(std::string("period=") + p);
    for (const auto& r : regions) names.push_back("region=" + r);
    names.push_back("duration_minutes");
    names.push_back("start_soc_pct");
    names.push_back("end_soc_pct");
    return names;
}

EncoderSpec build_encoder(const std::vector<RawEvent>& events) {
    if (events.empty()) {
        throw EmptyInput("build_encoder: no events");
    }
    std::set<std::string> connectors, regions;
    EncoderSpec spec;
    spec.duration_min = spec.start_soc_min = spec.end_soc_min = 1e300;
    spec.duration_max = spec.start_soc_max = spec.end_soc_max = -1e300;
    for (const auto& e : events) {
        connectors.insert(e.connector);
        regions.insert(e.region);
        spec.duration_min = std::min(spec.duration_min, static_cast<double>(e.duration_minutes));
        spec.duration_max = std::max(spec.duration_max, static_cast<double>(e.duration_minutes));
        spec.start_soc_min = std::min(spec.start_soc_min, static_cast<double>(e.start_soc_pct));
        spec.start_soc_max = std::max(spec.start_soc_max, static_cast<double>(e.start_soc_pct));
        spec.end_soc_min = std::min(spec.end_soc_min, static_cast<double>(e.end_soc_pct));
        spec.end_soc_max = std::max(spec.end_soc_max, static_cast<double>(e.end_soc_pct));
    }
    spec.connectors.assign(connectors.begin(), connectors.end());
    spec.regions.assign(regions.begin(), regions.end());
    return spec;
}

namespace {

double minmax_scale(double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

} // namespace

ClientDataset encode(const std::vector<RawEvent>& events, const EncoderSpec& spec) {
    if (events.empty()) {
        throw EmptyInput("encode: no events");
    }
    const auto names = spec.feature_names();
    const std::size_t ncols = names.size();
    ClientDataset ds;
    ds.feature_names = names;
    ds.features.rows = events.size();
    ds.features.cols = ncols;
    ds.features.data.assign(events.size() * ncols, 0.0);
    ds.targets.reserve(events.size());

    const std::size_t conn_base = 0;
    const std::size_t daytype_base = conn_base + spec.connectors.size();
    const std::size_t period_base = daytype_base + 2;
    const std::size_t region_base = period_base + 4;
    const std::size_t numeric_base = region_base + spec.regions.size();

    for (std::size_t r = 0; r < events.size(); ++r) {
        const auto& e = events[r];
        auto conn = std::find(spec.connectors.begin(), spec.connectors.end(), e.connector);
        if (conn != spec.connectors.end()) {
            ds.features.at(r, conn_base + static_cast<std::size_t>(conn - spec.connectors.begin())) = 1.0;
        }
        const int wd = weekday_of(e.start_time);
        const bool weekend = (wd == 0 || wd == 6);
        ds.features.at(r, daytype_base + (weekend ? 1 : 0)) = 1.0;
        ds.features.at(r, period_base + static_cast<std::size_t>(period_index(hour_of(e.start_time)))) = 1.0;
        auto reg = std::find(spec.regions.begin(), spec.regions.end(), e.region);
        if (reg != spec.regions.end()) {
            ds.features.at(r, region_base + static_cast<std::size_t>(reg - spec.regions.begin())) = 1.0;
        }
        ds.features.at(r, numeric_base + 0) =
            minmax_scale(static_cast<double>(e.duration_minutes), spec.duration_min, spec.duration_max);
        ds.features.at(r, numeric_base + 1) =
            minmax_scale(static_cast<double>(e.start_soc_pct), spec.start_soc_min, spec.start_soc_max);
        ds.features.at(r, numeric_base + 2) =
            minmax_scale(static_cast<double>(e.end_soc_pct), spec.end_soc_min, spec.end_soc_max);
        ds.targets.push_back(e.total_kwh);
    }
    return ds;
}

ClientDataset encode(const std::vector<RawEvent>& events) {
    return encode(events, build_encoder(events));
}

std::map<std::string, ClientDataset> partition_by_region(const std::vector<RawEvent>& events,
                                                         const std::vector<std::string>& regions) {
    if (events.empty()) {
        throw EmptyInput("partition_by_region: no events");
    }
    // Vocabulary comes from the full corpus so every partition shares
    // the same feature space.
    return partition_by_region(events, regions, build_encoder(events));
}

std::map<std::string, ClientDataset> partition_by_region(const std::vector<RawEvent>& events,
                                                         const std::vector<std::string>& regions,
                                                         const EncoderSpec& spec) {
    if (regions.empty()) {
        throw EmptyInput("partition_by_region: no regions");
    }
    const std::set<std::string> known(regions.begin(), regions.end());
    std::set<std::string> offending;
    for (const auto& e : events) {
        if (!known.count(e.region)) offending.insert(e.station);
    }
    if (!offending.empty()) {
        std::string msg = "events from stations outside the region list:";
        for (const auto& s : offending) msg += " " + s;
        throw UnknownRegion(msg);
    }
    std::map<std::string, std::vector<RawEvent>> by_region;
    for (const auto& e : events) by_region[e.region].push_back(e);

    std::map<std::string, ClientDataset> out;
    for (auto& [region, evs] : by_region) {
        ClientDataset ds = encode(evs, spec);
        ds.region = region;
        out.emplace(region, std::move(ds));
    }
    return out;
}

namespace {

/// Region-independent part of one synthetic session. Every region reuses
/// the same template list, so the regions differ only in their offset,
/// noise draws, and station/region labels: the cohorts any topology can
/// form are statistically identical, which is what keeps multi-server and
/// single-server runs comparable.
struct SessionTemplate {
    std::int64_t duration_minutes;
    int start_soc_pct;
    int end_soc_pct;
    const char* connector;
    int station_index;
    std::int64_t start_time;
    double noise;  // standard normal, scaled by noise_std at use
};

std::vector<SessionTemplate> build_session_templates(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> jitter30(0, 30);
    std::uniform_int_distribution<int> week(0, 51);
    std::uniform_int_distribution<int> weekday(0, 4);    // Mon..Fri
    std::uniform_int_distribution<int> weekend_day(0, 1);  // Sat..Sun
    std::uniform_int_distribution<int> morning_hour(8, 10);
    std::uniform_int_distribution<int> evening_hour(19, 21);
    std::uniform_int_distribution<int> minute(0, 59);
    std::uniform_int_distribution<int> station(0, 2);
    std::normal_distribution<double> noise(0.0, 1.0);
    // 2020-01-06 is a Monday, 2020-01-04 a Saturday.
    const std::int64_t monday = days_from_civil(2020, 1, 6);
    const std::int64_t saturday = days_from_civil(2020, 1, 4);

    std::vector<SessionTemplate> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SessionTemplate t;
        std::int64_t day;
        int hour;
        if (i % 2 == 0) {
            // Commuter fast charge: long weekday morning session, deep
            // charge from a low state of charge on a CCS connector.
            t.duration_minutes = 210 + jitter30(rng);
            t.start_soc_pct = 5 + std::uniform_int_distribution<int>(0, 20)(rng);
            t.end_soc_pct = 85 + std::uniform_int_distribution<int>(0, 15)(rng);
            t.connector = "CCS";
            day = monday + 7 * week(rng) + weekday(rng);
            hour = morning_hour(rng);
        } else {
            // Weekend top-up: short evening session, small charge delta
            // from a comfortable state of charge on a CHAdeMO connector.
            t.duration_minutes = 15 + jitter30(rng);
            t.start_soc_pct = 40 + std::uniform_int_distribution<int>(0, 20)(rng);
            t.end_soc_pct = t.start_soc_pct + std::uniform_int_distribution<int>(10, 20)(rng);
            t.connector = "CHAdeMO";
            day = saturday + 7 * week(rng) + weekend_day(rng);
            hour = evening_hour(rng);
        }
        t.station_index = station(rng);
        t.start_time = day * 86400 + hour * 3600 + minute(rng) * 60;
        t.noise = noise(rng);
        out.push_back(t);
    }
    return out;
}

} // namespace

std::vector<RawEvent> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.regions < 1 || spec.rows_per_region < 1) {
        throw InvalidConfig("generate_synthetic: regions and rows_per_region must be >= 1");
    }
    const auto templates = build_session_templates(spec.rows_per_region, spec.seed);

    std::vector<RawEvent> events;
    events.reserve(spec.regions * spec.rows_per_region);
    std::size_t serial = 0;
    for (std::size_t r = 0; r < spec.regions; ++r) {
        const std::string region = SyntheticTruth::region_name(r);
        for (std::size_t i = 0; i < spec.rows_per_region; ++i) {
            const SessionTemplate& t = templates[i];
            RawEvent e;
            e.connection_id = "syn-" + std::to_string(++serial);
            e.duration_minutes = t.duration_minutes;
            e.start_soc_pct = t.start_soc_pct;
            e.end_soc_pct = t.end_soc_pct;
            e.connector = t.connector;
            e.station = "ST-" + region + "-" + std::to_string(t.station_index + 1);
            e.start_time = t.start_time;
            e.end_time = e.start_time + e.duration_minutes * 60;
            e.region = region;
            double kwh = SyntheticTruth::kwh_per_minute * static_cast<double>(e.duration_minutes) +
                         SyntheticTruth::kwh_per_soc_pct *
                             static_cast<double>(e.end_soc_pct - e.start_soc_pct) +
                         SyntheticTruth::region_offset(r);
            if (spec.noise_std > 0.0) kwh += spec.noise_std * t.noise;
            e.total_kwh = std::max(0.0, kwh);
            events.push_back(std::move(e));
        }
    }
    return events;
}

namespace {

std::string csv_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

void write_events_csv(const std::vector<RawEvent>& events, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    for (std::size_t i = 0; i < kDefaultHeaders.size(); ++i) {
        out << (i ? "," : "") << kDefaultHeaders[i].second;
    }
    out << "\n";
    for (const auto& e : events) {
        const std::int64_t h = e.duration_minutes / 60;
        const std::int64_t m = e.duration_minutes % 60;
        out << e.connection_id << ',' << format_timestamp(e.start_time) << ','
            << format_timestamp(e.end_time) << ',' << h << ':' << (m < 10 ? "0" : "") << m << ','
            << e.connector << ',' << e.start_soc_pct << ',' << e.end_soc_pct << ','
            << csv_double(e.total_kwh) << ',' << e.station << "\n";
    }
}

void write_region_map_csv(const std::vector<RawEvent>& events, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    std::map<std::string, std::string> mapping;
    for (const auto& e : events) mapping[e.station] = e.region;
    out << "station,region\n";
    for (const auto& [station, region] : mapping) {
        out << station << ',' << region << "\n";
    }
}

} // namespace fed
