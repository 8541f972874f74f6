#include "solpol/microgrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace solpol {

double consumption_reward(double net_kw) {
    const double pos = std::max(0.0, net_kw);
    return -pos * pos * pos;
}

Microgrid::Microgrid(std::vector<BuildingTrace> traces, std::vector<BuildingModel> models, SimOptions options)
    : traces_(std::move(traces)), models_(std::move(models)), options_(options) {
    if (traces_.empty()) throw std::invalid_argument("microgrid needs at least one building");
    if (models_.size() != traces_.size()) throw std::invalid_argument("one building model per trace is required");
    if (!(options_.extra_decay >= 0.0 && options_.extra_decay < 1.0))
        throw std::invalid_argument("extra decay must be in [0, 1)");
    if (!(options_.demand_noise >= 0.0 && options_.demand_noise < 1.0))
        throw std::invalid_argument("demand noise must be in [0, 1)");
    hours_ = traces_.front().hours();
    for (std::size_t b = 0; b < traces_.size(); ++b) {
        traces_[b].validate();
        models_[b].validate();
        if (traces_[b].hours() != hours_) throw std::invalid_argument("all traces must have the same length");
    }
    realized_ = traces_;
    if (options_.demand_noise > 0.0) {
        for (std::size_t b = 0; b < realized_.size(); ++b) {
            std::seed_seq seq{options_.noise_seed, std::uint64_t{b}, std::uint64_t{0xd3}};
            Rng rng(seq);
            auto& r = realized_[b];
            const auto noisy = [&](double v) { return v * (1.0 + options_.demand_noise * (2.0 * uniform01(rng) - 1.0)); };
            for (std::size_t h = 0; h < hours_; ++h) {
                r.nonshiftable_kw[h] = noisy(r.nonshiftable_kw[h]);
                r.dhw_kw[h] = noisy(r.dhw_kw[h]);
                r.cooling_kw[h] = noisy(r.cooling_kw[h]);
            }
        }
    }
}

EnvState Microgrid::initial_state() const {
    EnvState s;
    s.devices.assign(num_buildings(), DeviceState{});
    s.prev_net_kw.assign(num_buildings(), 0.0);
    return s;
}

ObservationHistory Microgrid::history(std::size_t b, std::size_t now) const {
    const auto& r = realized_.at(b);
    now = std::min(now, hours_);
    const auto head = [now](const std::vector<double>& v) { return std::span<const double>(v.data(), now); };
    return {head(r.nonshiftable_kw), head(r.dhw_kw), head(r.cooling_kw), head(r.solar_kw), head(r.outdoor_temp_c)};
}

PlannerState Microgrid::planner_state(const EnvState& env, std::size_t b) const {
    PlannerState p;
    p.hour = static_cast<int>(env.hour % kHoursPerDay) + 1;
    p.soc_battery = env.devices.at(b).soc_battery;
    p.soc_heat = env.devices.at(b).soc_heat;
    p.soc_cool = env.devices.at(b).soc_cool;
    p.prev_grid_kw = env.prev_net_kw.at(b);
    return p;
}

namespace {

struct StorageOutcome {
    double action = 0.0;
    double soc = 0.0;
};

// Feasible action interval keeping the next SOC inside [0, 1].
std::pair<double, double> soc_limits(double keep_soc, double efficiency) {
    return {std::max(-1.0, -keep_soc / efficiency), std::min(1.0, (1.0 - keep_soc) / efficiency)};
}

// Thermal device + storage: the converter output must equal storage charging plus demand,
// limited to [0, max_output]. Returns the applied action, converter electricity and unmet demand.
struct ThermalOutcome {
    double action = 0.0;
    double electricity = 0.0;
    double unmet = 0.0;
};

ThermalOutcome resolve_thermal(double requested, double demand, double capacity, double keep_soc, double efficiency,
                               double conversion, double max_kw, bool clip) {
    ThermalOutcome out;
    if (!clip) {
        out.action = capacity > 0.0 ? requested : 0.0;
        out.electricity = (out.action * capacity + demand) / conversion;
        return out;
    }
    const double max_output = max_kw * conversion;
    double a = 0.0;
    if (capacity > 0.0) {
        auto [lo, hi] = soc_limits(keep_soc, efficiency);
        const double th_lo = -demand / capacity;
        const double th_hi = (max_output - demand) / capacity;
        if (th_hi < lo) {
            a = lo;  // demand exceeds converter plus the largest possible discharge
        } else {
            a = std::clamp(std::clamp(requested, lo, hi), std::max(lo, th_lo), std::min(hi, th_hi));
        }
    }
    const double output = a * capacity + demand;
    out.action = a;
    out.electricity = std::clamp(output, 0.0, max_output) / conversion;
    out.unmet = std::max(0.0, output - max_output);
    return out;
}

}  // namespace

StepResult Microgrid::step(const EnvState& env, std::span<const Action> actions) const {
    const std::size_t nb = num_buildings();
    if (actions.size() != nb) throw std::invalid_argument("one action per building is required");
    if (env.devices.size() != nb || env.prev_net_kw.size() != nb) throw std::invalid_argument("state size mismatch");
    if (env.hour >= hours_) throw std::out_of_range("simulation ran past the end of the traces");
    const bool clip = options_.clip_actions;
    const std::size_t t = env.hour;

    StepResult res;
    res.next = env;
    res.next.hour = t + 1;
    res.buildings.resize(nb);
    res.building_rewards.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const BuildingModel& m = models_[b];
        const BuildingTrace& r = realized_[b];
        const DeviceState& dev = env.devices[b];
        BuildingStep& out = res.buildings[b];
        out.requested = actions[b];

        Action a = actions[b];
        if (clip) {
            a.battery = std::clamp(a.battery, -1.0, 1.0);
            a.heat = std::clamp(a.heat, -1.0, 1.0);
            a.cool = std::clamp(a.cool, -1.0, 1.0);
        }
        const double keep_bat = std::max(0.0, 1.0 - m.battery.decay - options_.extra_decay) * dev.soc_battery;
        const double keep_heat = std::max(0.0, 1.0 - m.heat_storage.decay - options_.extra_decay) * dev.soc_heat;
        const double keep_cool = std::max(0.0, 1.0 - m.cooling_storage.decay - options_.extra_decay) * dev.soc_cool;

        if (m.battery.capacity <= 0.0) a.battery = 0.0;
        else if (clip) {
            const auto [lo, hi] = soc_limits(keep_bat, m.battery.efficiency);
            a.battery = std::clamp(a.battery, lo, hi);
        }

        const double heat_demand = r.dhw_kw[t];
        ThermalOutcome heat;
        if (m.has_heating) {
            heat = resolve_thermal(a.heat, heat_demand, m.heat_storage.capacity, keep_heat, m.heat_storage.efficiency,
                                   m.heater_efficiency, m.heater_max_kw, clip);
        } else {
            heat.unmet = heat_demand;
        }
        a.heat = heat.action;

        const double cop = cop_cooling(r.outdoor_temp_c[t], m);
        const ThermalOutcome cool = resolve_thermal(a.cool, r.cooling_kw[t], m.cooling_storage.capacity, keep_cool,
                                                    m.cooling_storage.efficiency, cop, m.hp_max_kw, clip);
        a.cool = cool.action;

        out.applied = a;
        out.clipped = std::abs(a.battery - out.requested.battery) > 1e-12 ||
                      std::abs(a.heat - out.requested.heat) > 1e-12 || std::abs(a.cool - out.requested.cool) > 1e-12;
        out.nonshiftable_kw = r.nonshiftable_kw[t];
        out.solar_kw = r.solar_kw[t];
        out.heater_kw = heat.electricity;
        out.heat_pump_kw = cool.electricity;
        out.battery_kw = a.battery * m.battery.capacity;
        out.unmet_heat_kw = heat.unmet;
        out.unmet_cool_kw = cool.unmet;
        out.net_kw = out.nonshiftable_kw + out.heat_pump_kw + out.heater_kw + out.battery_kw - out.solar_kw;

        DeviceState next{keep_bat + a.battery * m.battery.efficiency, keep_heat + a.heat * m.heat_storage.efficiency,
                         keep_cool + a.cool * m.cooling_storage.efficiency};
        if (clip) {
            next.soc_battery = std::clamp(next.soc_battery, 0.0, 1.0);
            next.soc_heat = std::clamp(next.soc_heat, 0.0, 1.0);
            next.soc_cool = std::clamp(next.soc_cool, 0.0, 1.0);
        }
        out.after = next;
        res.next.devices[b] = next;
        res.next.prev_net_kw[b] = out.net_kw;
        res.building_rewards[b] = consumption_reward(out.net_kw);
        res.district_net_kw += out.net_kw;
    }
    res.reward = consumption_reward(res.district_net_kw);
    return res;
}

double EpisodeTrace::episodic_reward() const {
    double s = 0.0;
    for (const auto& h : hours) s += h.reward;
    return s;
}

double EpisodeTrace::building_reward(std::size_t b) const {
    double s = 0.0;
    for (const auto& h : hours) s += h.building_rewards.at(b);
    return s;
}

std::vector<double> EpisodeTrace::building_net(std::size_t b) const {
    std::vector<double> e;
    e.reserve(hours.size());
    for (const auto& h : hours) e.push_back(h.buildings.at(b).net_kw);
    return e;
}

std::vector<double> EpisodeTrace::district_net() const {
    std::vector<double> e;
    e.reserve(hours.size());
    for (const auto& h : hours) e.push_back(h.district_net_kw);
    return e;
}

std::size_t EpisodeTrace::clipped_steps() const {
    std::size_t n = 0;
    for (const auto& h : hours)
        for (const auto& b : h.buildings) n += b.clipped ? 1 : 0;
    return n;
}

EpisodeResult run_episode(const Microgrid& grid, const EnvState& start, const Policy& policy) {
    if (start.hour % kHoursPerDay != 0) throw std::invalid_argument("episodes must start at midnight");
    if (start.hour + kHoursPerDay > grid.hours()) throw std::out_of_range("episode extends past the end of the traces");
    EpisodeResult res;
    res.trace.hours.reserve(kHoursPerDay);
    EnvState state = start;
    for (int h = 0; h < kHoursPerDay; ++h) {
        const std::vector<Action> actions = policy(grid, state);
        StepResult step = grid.step(state, actions);
        HourRecord rec;
        rec.before = std::move(state);
        rec.buildings = std::move(step.buildings);
        rec.district_net_kw = step.district_net_kw;
        rec.reward = step.reward;
        rec.building_rewards = std::move(step.building_rewards);
        res.reward += rec.reward;
        res.trace.hours.push_back(std::move(rec));
        state = std::move(step.next);
    }
    res.final_state = std::move(state);
    return res;
}

RbcTable default_rbc_table() {
    RbcTable t{};
    for (int hour = 1; hour <= kHoursPerDay; ++hour) {
        double a = 0.0;
        if (hour >= 23 || hour <= 8) a = 0.08;
        else if (hour >= 9 && hour <= 21) a = -0.08;
        t[static_cast<std::size_t>(hour - 1)] = a;
    }
    return t;
}

Action rbc_action(int hour_of_day, const RbcTable& table) {
    if (hour_of_day < 1 || hour_of_day > kHoursPerDay) throw std::invalid_argument("hour of day must be in [1, 24]");
    const double a = table[static_cast<std::size_t>(hour_of_day - 1)];
    return {a, a, a};
}

Policy rbc_policy(RbcTable table) {
    return [table](const Microgrid& grid, const EnvState& env) {
        const Action a = rbc_action(static_cast<int>(env.hour % kHoursPerDay) + 1, table);
        return std::vector<Action>(grid.num_buildings(), a);
    };
}

Policy zero_policy() {
    return [](const Microgrid& grid, const EnvState&) { return std::vector<Action>(grid.num_buildings(), Action{}); };
}

}  // namespace solpol
