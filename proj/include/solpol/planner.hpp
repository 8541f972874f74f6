#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "solpol/lp.hpp"
#include "solpol/param_space.hpp"

namespace solpol {

inline constexpr int kHoursPerDay = 24;

struct StorageParams {
    double decay = 0.008;      // fraction of charge lost per hour
    double capacity = 0.0;     // kWh
    double efficiency = 0.95;
};

/// Device constants of one building. Electric heater feeds hot water, heat pump feeds cooling.
struct BuildingModel {
    double heater_efficiency = 0.9;
    double heater_max_kw = 0.0;
    double hp_tech_efficiency = 0.22;
    double hp_target_cooling_c = 8.0;
    double hp_max_kw = 0.0;
    StorageParams battery;
    StorageParams heat_storage;
    StorageParams cooling_storage;
    bool has_heating = true;

    void validate() const;
};

/// Planner inputs for hours r..24 of the current day, index 0 is hour r.
struct Forecast {
    std::vector<double> cop_cooling;
    std::vector<double> solar_kw;
    std::vector<double> nonshiftable_kw;
    std::vector<double> heating_kw;
    std::vector<double> cooling_kw;

    std::size_t size() const { return nonshiftable_kw.size(); }
    void validate() const;
};

struct PlannerState {
    int hour = 1;  // hour of day, 1..24
    double soc_battery = 0.0;
    double soc_heat = 0.0;
    double soc_cool = 0.0;
    double prev_grid_kw = 0.0;  // observed net import of the previous hour
};

/// Storage actions as a fraction of capacity per hour, each in [-1, 1].
struct Action {
    double battery = 0.0;
    double heat = 0.0;
    double cool = 0.0;

    friend bool operator==(const Action&, const Action&) = default;
};

/// COP of the heat pump in cooling mode, clamped into [1, 20].
double cop_cooling(double outdoor_temp_c, const BuildingModel& model);

/// Realized observations strictly before the current hour; index 0 is absolute hour 0 (midnight).
struct ObservationHistory {
    std::span<const double> nonshiftable_kw;
    std::span<const double> heating_kw;
    std::span<const double> cooling_kw;
    std::span<const double> solar_kw;
    std::span<const double> outdoor_temp_c;

    std::size_t size() const { return nonshiftable_kw.size(); }
};

/// Hour-of-day averages over the last `window_days` days for the next `horizon` hours.
/// Hours without any same-hour observation fall back to the most recent value of the series
/// (zero loads, current temperature when the history is empty).
Forecast forecast_moving_average(const ObservationHistory& history, double current_temp_c,
                                 const BuildingModel& model, std::size_t horizon, std::size_t window_days = 14);

/// Column layout of the lookahead program: ten variables per planned hour.
struct LookaheadLayout {
    enum Var : std::size_t {
        Grid = 0, HeatPump, Heater, SocBattery, SocHeat, SocCool, ActBattery, ActHeat, ActCool, Ramp,
        kPerHour
    };
    static std::size_t index(std::size_t hour_offset, Var v) { return hour_offset * kPerHour + v; }
};

/// Bound on |grid exchange| used by the planner.
double grid_exchange_cap(const Forecast& forecast, const BuildingModel& model);

/// Rolling-horizon program for hours r..24: minimize sum of |E_t - E_{t-1}| + theta_t E_t
/// subject to energy balances, storage recursions and device limits (encoded as maximize -cost).
lp::LinearProgram build_lookahead_lp(const PlannerState& state, const Forecast& forecast, const ParamVector& theta,
                                     const BuildingModel& model);

struct PlannedHour {
    double grid_kw, heat_pump_kw, heater_kw;
    double soc_battery, soc_heat, soc_cool;
    Action action;
    double ramp;
};

struct Plan {
    lp::Status status = lp::Status::Infeasible;
    std::vector<PlannedHour> hours;
    double cost = 0.0;  // surrogate cost at the optimum
    bool dual_degenerate = false;
    double min_reduced_cost = 0.0;
};

Plan plan(const PlannerState& state, const Forecast& forecast, const ParamVector& theta, const BuildingModel& model);

struct PolicyDecision {
    Action action;
    bool infeasible = false;
};

/// First-hour storage actions of the optimal plan; zero action with the flag set when the
/// program is infeasible. Throws std::runtime_error on an unbounded program.
PolicyDecision policy_action(const PlannerState& state, const Forecast& forecast, const ParamVector& theta,
                             const BuildingModel& model);

}  // namespace solpol
