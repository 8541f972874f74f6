#include "solpol/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace solpol {

bool BuildingTrace::has_heating() const {
    return std::any_of(dhw_kw.begin(), dhw_kw.end(), [](double v) { return v > 0.0; });
}

void BuildingTrace::validate() const {
    const std::size_t n = hours();
    const auto label = "building " + std::to_string(building_id);
    if (dhw_kw.size() != n || cooling_kw.size() != n || solar_kw.size() != n || outdoor_temp_c.size() != n ||
        carbon_kg_per_kwh.size() != n)
        throw TraceError(label + ": series have different lengths");
    for (std::size_t h = 0; h < n; ++h) {
        const double vals[] = {nonshiftable_kw[h], dhw_kw[h], cooling_kw[h], solar_kw[h], outdoor_temp_c[h],
                               carbon_kg_per_kwh[h]};
        for (double v : vals)
            if (!std::isfinite(v)) throw TraceError(label + ": non-finite value at hour " + std::to_string(h));
        if (nonshiftable_kw[h] < 0 || dhw_kw[h] < 0 || cooling_kw[h] < 0 || solar_kw[h] < 0 || carbon_kg_per_kwh[h] < 0)
            throw TraceError(label + ": negative load at hour " + std::to_string(h));
    }
}

namespace {

double jitter(Rng& rng, double noise) { return 1.0 + noise * (2.0 * uniform01(rng) - 1.0); }

double between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace

std::vector<BuildingTrace> generate_synthetic_traces(std::size_t n_buildings, std::size_t n_weeks, std::uint64_t seed,
                                                     double noise) {
    if (n_buildings < 1) throw std::invalid_argument("need at least one building");
    if (!(noise >= 0.0 && noise < 1.0)) throw std::invalid_argument("noise must be in [0, 1)");
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const std::size_t hours = n_weeks * 7 * kHoursPerDay;

    // Weather and grid carbon are shared by the district.
    std::vector<double> temp(hours), carbon(hours);
    {
        std::seed_seq seq{seed, std::uint64_t{0x5eed}};
        Rng rng(seq);
        for (std::size_t h = 0; h < hours; ++h) {
            const double day = static_cast<double>(h / kHoursPerDay);
            const double hod = static_cast<double>(h % kHoursPerDay);
            const double annual = 22.0 + 7.0 * std::sin(kTwoPi * (day - 100.0) / 364.0);
            const double daily = 4.0 * std::cos(kTwoPi * (hod - 15.0) / 24.0);
            temp[h] = annual + daily * jitter(rng, noise);
            carbon[h] = (0.40 + 0.08 * std::cos(kTwoPi * (hod - 19.0) / 24.0)) * jitter(rng, noise);
        }
    }

    std::vector<BuildingTrace> out;
    out.reserve(n_buildings);
    for (std::size_t b = 0; b < n_buildings; ++b) {
        std::seed_seq seq{seed, std::uint64_t{b + 1}};
        Rng rng(seq);
        const double ns_base = between(rng, 2.0, 6.0);
        const double ns_amp = between(rng, 0.3, 0.6);
        const double ns_peak = std::floor(between(rng, 17.0, 21.0));
        const double weekend = between(rng, 0.75, 1.1);
        const double pv_cap = between(rng, 2.0, 8.0);
        const double cool_gain = between(rng, 0.4, 1.0);
        const double dhw_base = between(rng, 0.5, 2.0);
        const double temp_offset = between(rng, -0.5, 0.5);
        const bool heating = b % 9 != 2;

        BuildingTrace t;
        t.building_id = static_cast<int>(b) + 1;
        for (auto* v : {&t.nonshiftable_kw, &t.dhw_kw, &t.cooling_kw, &t.solar_kw, &t.outdoor_temp_c,
                        &t.carbon_kg_per_kwh})
            v->resize(hours);
        for (std::size_t h = 0; h < hours; ++h) {
            const std::size_t day = h / kHoursPerDay;
            const double hod = static_cast<double>(h % kHoursPerDay);
            const double week_factor = day % 7 >= 5 ? weekend : 1.0;
            const double season = 0.8 + 0.2 * std::sin(kTwoPi * (static_cast<double>(day) - 80.0) / 364.0);

            t.outdoor_temp_c[h] = temp[h] + temp_offset;
            t.carbon_kg_per_kwh[h] = carbon[h];
            t.nonshiftable_kw[h] =
                ns_base * week_factor * (1.0 + ns_amp * std::cos(kTwoPi * (hod - ns_peak) / 24.0)) * jitter(rng, noise);
            t.dhw_kw[h] = heating ? dhw_base * (1.0 + 0.6 * std::cos(kTwoPi * (hod - 7.0) / 12.0)) * jitter(rng, noise)
                                  : 0.0;
            const double sun = std::max(0.0, std::sin(std::numbers::pi * (hod - 6.0) / 12.0));
            t.solar_kw[h] = pv_cap * season * sun * jitter(rng, noise);
            const double warm = std::max(0.0, t.outdoor_temp_c[h] - 20.0);
            t.cooling_kw[h] = (0.3 + cool_gain * warm) * week_factor * jitter(rng, noise);
        }
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

const char* const kHeader = "building_id,hour,nonshiftable_kw,dhw_kw,cooling_kw,solar_kw,outdoor_temp_c,carbon_kg_per_kwh";

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& s, std::size_t row, const char* column) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw TraceError(fmt::format("row {}: column {} is not a number: '{}'", row, column, s));
    if (!std::isfinite(v)) throw TraceError(fmt::format("row {}: column {} is not finite", row, column));
    return v;
}

}  // namespace

std::vector<BuildingTrace> read_traces_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw TraceError("empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    const auto header = split(line);
    const auto expected = split(kHeader);
    for (const auto& name : expected) {
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw TraceError("missing column '" + name + "'");
    }
    std::vector<std::size_t> col(expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k)
        col[k] = static_cast<std::size_t>(std::find(header.begin(), header.end(), expected[k]) - header.begin());

    std::map<int, BuildingTrace> by_id;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw TraceError(fmt::format("row {}: expected {} columns, found {}", row, header.size(), cells.size()));
        const auto get = [&](std::size_t k) { return parse_number(cells[col[k]], row, expected[k].c_str()); };
        const double id = get(0), hour = get(1);
        if (id != std::floor(id) || hour != std::floor(hour) || hour < 0)
            throw TraceError(fmt::format("row {}: building_id and hour must be nonnegative integers", row));
        BuildingTrace& t = by_id[static_cast<int>(id)];
        t.building_id = static_cast<int>(id);
        if (static_cast<std::size_t>(hour) != t.hours())
            throw TraceError(fmt::format("row {}: building {} expects hour {}, found {}", row, t.building_id, t.hours(),
                                         static_cast<std::size_t>(hour)));
        const double ns = get(2), dhw = get(3), cool = get(4), pv = get(5), temp = get(6), co2 = get(7);
        const std::pair<double, const char*> loads[] = {{ns, "nonshiftable_kw"}, {dhw, "dhw_kw"},
                                                        {cool, "cooling_kw"}, {pv, "solar_kw"},
                                                        {co2, "carbon_kg_per_kwh"}};
        for (const auto& [v, name] : loads)
            if (v < 0.0) throw TraceError(fmt::format("row {}: negative value in column {}", row, name));
        t.nonshiftable_kw.push_back(ns);
        t.dhw_kw.push_back(dhw);
        t.cooling_kw.push_back(cool);
        t.solar_kw.push_back(pv);
        t.outdoor_temp_c.push_back(temp);
        t.carbon_kg_per_kwh.push_back(co2);
    }
    if (by_id.empty()) throw TraceError("trace file has no data rows");
    std::vector<BuildingTrace> out;
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    for (const auto& t : out) {
        if (t.hours() != out.front().hours())
            throw TraceError(fmt::format("building {} has {} hours, building {} has {}", t.building_id, t.hours(),
                                         out.front().building_id, out.front().hours()));
    }
    return out;
}

std::vector<BuildingTrace> load_traces_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open trace file " + path.string());
    return read_traces_csv(in);
}

void write_traces_csv(const std::vector<BuildingTrace>& traces, std::ostream& out) {
    out << kHeader << '\n';
    for (const auto& t : traces) {
        for (std::size_t h = 0; h < t.hours(); ++h) {
            out << fmt::format("{},{},{},{},{},{},{},{}\n", t.building_id, h, t.nonshiftable_kw[h], t.dhw_kw[h],
                               t.cooling_kw[h], t.solar_kw[h], t.outdoor_temp_c[h], t.carbon_kg_per_kwh[h]);
        }
    }
}

void save_traces_csv(const std::vector<BuildingTrace>& traces, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TraceError("cannot write trace file " + path.string());
    write_traces_csv(traces, out);
}

BuildingModel size_model(const BuildingTrace& trace) {
    BuildingModel m;
    const auto peak = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
    const auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    double peak_hp = 0.0;
    for (std::size_t h = 0; h < trace.hours(); ++h)
        peak_hp = std::max(peak_hp, trace.cooling_kw[h] / cop_cooling(trace.outdoor_temp_c[h], m));
    m.has_heating = trace.has_heating();
    m.heater_max_kw = m.has_heating ? 1.5 * peak(trace.dhw_kw) / m.heater_efficiency : 0.0;
    m.hp_max_kw = 1.5 * peak_hp;
    m.battery.capacity = 2.0 * mean(trace.nonshiftable_kw);
    m.heat_storage.capacity = m.has_heating ? 3.0 * mean(trace.dhw_kw) : 0.0;
    m.cooling_storage.capacity = 3.0 * mean(trace.cooling_kw);
    return m;
}

}  // namespace solpol
