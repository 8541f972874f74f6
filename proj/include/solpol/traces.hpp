#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "solpol/planner.hpp"

namespace solpol {

/// Hourly exogenous series of one building, starting at midnight of day 0.
struct BuildingTrace {
    int building_id = 0;
    std::vector<double> nonshiftable_kw;
    std::vector<double> dhw_kw;
    std::vector<double> cooling_kw;
    std::vector<double> solar_kw;
    std::vector<double> outdoor_temp_c;
    std::vector<double> carbon_kg_per_kwh;

    std::size_t hours() const { return nonshiftable_kw.size(); }
    bool has_heating() const;
    /// Equal lengths, finite values, nonnegative loads.
    void validate() const;

    friend bool operator==(const BuildingTrace&, const BuildingTrace&) = default;
};

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Daily sinusoidal profiles with per-building amplitude and phase offsets, a weekday/weekend
/// pattern, annual temperature swing and bounded multiplicative noise of relative size `noise`.
/// Every ninth building starting at index 2 has no hot-water demand.
std::vector<BuildingTrace> generate_synthetic_traces(std::size_t n_buildings, std::size_t n_weeks, std::uint64_t seed,
                                                     double noise = 0.1);

/// Long-format CSV:
/// building_id,hour,nonshiftable_kw,dhw_kw,cooling_kw,solar_kw,outdoor_temp_c,carbon_kg_per_kwh
std::vector<BuildingTrace> read_traces_csv(std::istream& in);
std::vector<BuildingTrace> load_traces_csv(const std::filesystem::path& path);
void write_traces_csv(const std::vector<BuildingTrace>& traces, std::ostream& out);
void save_traces_csv(const std::vector<BuildingTrace>& traces, const std::filesystem::path& path);

/// Device sizing derived from the trace peaks and means with default efficiencies.
BuildingModel size_model(const BuildingTrace& trace);

}  // namespace solpol
