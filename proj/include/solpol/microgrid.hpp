#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "solpol/planner.hpp"
#include "solpol/traces.hpp"

namespace solpol {

struct DeviceState {
    double soc_battery = 0.0;
    double soc_heat = 0.0;
    double soc_cool = 0.0;

    friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

struct EnvState {
    std::size_t hour = 0;  // absolute hour, 0 = midnight of day 0
    std::vector<DeviceState> devices;
    std::vector<double> prev_net_kw;

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// Fidelity knobs of the environment relative to the planner's model.
struct SimOptions {
    bool clip_actions = true;
    double extra_decay = 0.0;   // added to every storage decay rate
    double demand_noise = 0.0;  // relative bound of multiplicative noise on realized demands
    std::uint64_t noise_seed = 0;
};

struct BuildingStep {
    Action requested;
    Action applied;
    double nonshiftable_kw = 0.0;
    double solar_kw = 0.0;
    double heater_kw = 0.0;
    double heat_pump_kw = 0.0;
    double battery_kw = 0.0;  // a_bat * Cp_bat
    double net_kw = 0.0;
    double unmet_heat_kw = 0.0;
    double unmet_cool_kw = 0.0;
    bool clipped = false;
    DeviceState after;

    friend bool operator==(const BuildingStep&, const BuildingStep&) = default;
};

struct StepResult {
    EnvState next;
    std::vector<BuildingStep> buildings;
    double district_net_kw = 0.0;
    double reward = 0.0;
    std::vector<double> building_rewards;
};

/// -max(0, e)^3
double consumption_reward(double net_kw);

/// Multi-building district: storage dynamics follow the planner's device equations,
/// realized demands may carry observation noise.
class Microgrid {
public:
    Microgrid(std::vector<BuildingTrace> traces, std::vector<BuildingModel> models, SimOptions options = {});

    std::size_t num_buildings() const { return traces_.size(); }
    std::size_t hours() const { return hours_; }
    const BuildingModel& model(std::size_t b) const { return models_[b]; }
    const BuildingTrace& realized(std::size_t b) const { return realized_[b]; }
    const SimOptions& options() const { return options_; }
    /// Grid carbon intensity (taken from the first building's trace).
    std::span<const double> carbon_intensity() const { return realized_.front().carbon_kg_per_kwh; }

    EnvState initial_state() const;
    /// Realized data strictly before `now`.
    ObservationHistory history(std::size_t b, std::size_t now) const;
    PlannerState planner_state(const EnvState& env, std::size_t b) const;

    StepResult step(const EnvState& env, std::span<const Action> actions) const;

private:
    std::vector<BuildingTrace> traces_;
    std::vector<BuildingTrace> realized_;
    std::vector<BuildingModel> models_;
    SimOptions options_;
    std::size_t hours_ = 0;
};

struct HourRecord {
    EnvState before;
    std::vector<BuildingStep> buildings;
    double district_net_kw = 0.0;
    double reward = 0.0;
    std::vector<double> building_rewards;

    friend bool operator==(const HourRecord&, const HourRecord&) = default;
};

/// One 24-hour episode.
struct EpisodeTrace {
    std::vector<HourRecord> hours;

    double episodic_reward() const;
    double building_reward(std::size_t b) const;
    std::vector<double> building_net(std::size_t b) const;
    std::vector<double> district_net() const;
    std::size_t clipped_steps() const;

    friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

using Policy = std::function<std::vector<Action>(const Microgrid&, const EnvState&)>;

struct EpisodeResult {
    EpisodeTrace trace;
    double reward = 0.0;
    EnvState final_state;
};

/// Steps 24 hours from a midnight-aligned state; the state carries over between episodes.
EpisodeResult run_episode(const Microgrid& grid, const EnvState& start, const Policy& policy);

using RbcTable = std::array<double, kHoursPerDay>;

/// Charge +0.08 in hours 23-24 and 1-8, discharge -0.08 in hours 9-21, idle in hour 22.
RbcTable default_rbc_table();

/// Same action on every storage of every building, looked up by hour of day (1..24).
Action rbc_action(int hour_of_day, const RbcTable& table = default_rbc_table());
Policy rbc_policy(RbcTable table = default_rbc_table());
Policy zero_policy();

}  // namespace solpol
