#include "solpol/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace solpol {

namespace {

void check_storage(const StorageParams& s, const char* name) {
    if (!(s.efficiency > 0.0 && s.efficiency <= 1.0))
        throw std::invalid_argument(std::string(name) + " efficiency must be in (0, 1]");
    if (!(s.capacity >= 0.0)) throw std::invalid_argument(std::string(name) + " capacity must be >= 0");
    if (!(s.decay >= 0.0 && s.decay < 1.0)) throw std::invalid_argument(std::string(name) + " decay must be in [0, 1)");
}

}  // namespace

void BuildingModel::validate() const {
    if (!(heater_efficiency > 0.0 && heater_efficiency <= 1.0))
        throw std::invalid_argument("heater efficiency must be in (0, 1]");
    if (!(hp_tech_efficiency > 0.0 && hp_tech_efficiency <= 1.0))
        throw std::invalid_argument("heat pump technical efficiency must be in (0, 1]");
    if (!(heater_max_kw >= 0.0) || !(hp_max_kw >= 0.0)) throw std::invalid_argument("nominal powers must be >= 0");
    if (!std::isfinite(hp_target_cooling_c)) throw std::invalid_argument("target cooling temperature must be finite");
    check_storage(battery, "battery");
    check_storage(heat_storage, "heat storage");
    check_storage(cooling_storage, "cooling storage");
}

void Forecast::validate() const {
    const std::size_t n = size();
    if (cop_cooling.size() != n || solar_kw.size() != n || heating_kw.size() != n || cooling_kw.size() != n)
        throw std::invalid_argument("forecast series have different lengths");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(cop_cooling[i] >= 1.0)) throw std::invalid_argument("forecast COP must be >= 1");
        if (!std::isfinite(solar_kw[i]) || !std::isfinite(nonshiftable_kw[i]) || !std::isfinite(heating_kw[i]) ||
            !std::isfinite(cooling_kw[i]))
            throw std::invalid_argument("forecast values must be finite");
    }
}

double cop_cooling(double outdoor_temp_c, const BuildingModel& model) {
    const double gap = outdoor_temp_c - model.hp_target_cooling_c;
    if (gap <= 0.0) return 20.0;
    const double cop = model.hp_tech_efficiency * (model.hp_target_cooling_c + 273.15) / gap;
    return std::clamp(cop, 1.0, 20.0);
}

namespace {

// Mean of up to `window` same-hour observations before `now`; falls back to the latest value.
double hour_average(std::span<const double> series, std::size_t target_abs, std::size_t window, double empty_value) {
    const std::size_t now = series.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 1; k <= window && k * kHoursPerDay <= target_abs; ++k) {
        const std::size_t abs = target_abs - k * kHoursPerDay;
        if (abs >= now) continue;
        sum += series[abs];
        ++count;
    }
    if (count > 0) return sum / static_cast<double>(count);
    return now > 0 ? series[now - 1] : empty_value;
}

}  // namespace

Forecast forecast_moving_average(const ObservationHistory& history, double current_temp_c, const BuildingModel& model,
                                 std::size_t horizon, std::size_t window_days) {
    const std::size_t now = history.size();
    if (history.heating_kw.size() != now || history.cooling_kw.size() != now || history.solar_kw.size() != now ||
        history.outdoor_temp_c.size() != now)
        throw std::invalid_argument("observation history series have different lengths");
    Forecast f;
    f.cop_cooling.reserve(horizon);
    for (std::size_t i = 0; i < horizon; ++i) {
        const std::size_t abs = now + i;
        f.nonshiftable_kw.push_back(hour_average(history.nonshiftable_kw, abs, window_days, 0.0));
        f.heating_kw.push_back(hour_average(history.heating_kw, abs, window_days, 0.0));
        f.cooling_kw.push_back(hour_average(history.cooling_kw, abs, window_days, 0.0));
        f.solar_kw.push_back(hour_average(history.solar_kw, abs, window_days, 0.0));
        const double temp = hour_average(history.outdoor_temp_c, abs, window_days, current_temp_c);
        f.cop_cooling.push_back(cop_cooling(temp, model));
    }
    return f;
}

double grid_exchange_cap(const Forecast& forecast, const BuildingModel& model) {
    double peak_ns = 0.0, peak_pv = 0.0;
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        peak_ns = std::max(peak_ns, forecast.nonshiftable_kw[i]);
        peak_pv = std::max(peak_pv, forecast.solar_kw[i]);
    }
    const double devices = peak_ns + peak_pv + model.hp_max_kw + model.heater_max_kw + model.battery.capacity;
    return std::max(10.0 * peak_ns, devices);
}

lp::LinearProgram build_lookahead_lp(const PlannerState& state, const Forecast& forecast, const ParamVector& theta,
                                     const BuildingModel& model) {
    using L = LookaheadLayout;
    model.validate();
    forecast.validate();
    if (state.hour < 1 || state.hour > kHoursPerDay) throw std::invalid_argument("planner hour must be in [1, 24]");
    const std::size_t horizon = static_cast<std::size_t>(kHoursPerDay - state.hour + 1);
    if (forecast.size() != horizon)
        throw std::invalid_argument("forecast length " + std::to_string(forecast.size()) + " does not match horizon " +
                                    std::to_string(horizon));
    if (theta.size() != kHoursPerDay) throw std::invalid_argument("theta must have 24 entries");

    const double cap = grid_exchange_cap(forecast, model);
    const bool heating = model.has_heating;
    const auto act_hi = [](const StorageParams& s, bool on) { return on && s.capacity > 0.0 ? 1.0 : 0.0; };

    lp::LinearProgram prog;
    for (std::size_t h = 0; h < horizon; ++h) {
        const double price = theta[static_cast<Eigen::Index>(state.hour - 1 + static_cast<int>(h))];
        prog.add_var(-cap, cap, -price);                                  // grid exchange
        prog.add_var(0.0, model.hp_max_kw);                                // heat pump electricity
        prog.add_var(0.0, heating ? model.heater_max_kw : 0.0);            // heater electricity
        prog.add_var(0.0, 1.0);                                            // battery SOC
        prog.add_var(0.0, 1.0);                                            // heat storage SOC
        prog.add_var(0.0, 1.0);                                            // cooling storage SOC
        const double bat = act_hi(model.battery, true);
        const double hst = act_hi(model.heat_storage, heating);
        const double cst = act_hi(model.cooling_storage, true);
        prog.add_var(-bat, bat);
        prog.add_var(-hst, hst);
        prog.add_var(-cst, cst);
        prog.add_var(0.0, lp::kInf, -1.0);                                 // ramp magnitude
    }

    const std::array<std::pair<L::Var, L::Var>, 3> storages{{{L::SocBattery, L::ActBattery},
                                                             {L::SocHeat, L::ActHeat},
                                                             {L::SocCool, L::ActCool}}};
    const std::array<const StorageParams*, 3> params{&model.battery, &model.heat_storage, &model.cooling_storage};
    const std::array<double, 3> soc0{state.soc_battery, state.soc_heat, state.soc_cool};

    for (std::size_t h = 0; h < horizon; ++h) {
        const auto v = [h](L::Var var) { return L::index(h, var); };
        const double heat_demand = heating ? forecast.heating_kw[h] : 0.0;
        // E_PV + E_grid = E_NS + E_hp + E_heater + a_bat Cp_bat
        prog.add_eq({{v(L::Grid), 1.0}, {v(L::HeatPump), -1.0}, {v(L::Heater), -1.0},
                     {v(L::ActBattery), -model.battery.capacity}},
                    forecast.nonshiftable_kw[h] - forecast.solar_kw[h]);
        // eta_heater E_heater = a_H Cp_H + H_bd
        prog.add_eq({{v(L::Heater), model.heater_efficiency}, {v(L::ActHeat), -model.heat_storage.capacity}},
                    heat_demand);
        // COP E_hp = a_C Cp_C + C_bd
        prog.add_eq({{v(L::HeatPump), forecast.cop_cooling[h]}, {v(L::ActCool), -model.cooling_storage.capacity}},
                    forecast.cooling_kw[h]);
        // SOC_t = (1 - Cf) SOC_{t-1} + eta a_t
        for (std::size_t s = 0; s < 3; ++s) {
            const auto [soc, act] = storages[s];
            const double keep = 1.0 - params[s]->decay;
            if (h == 0) {
                prog.add_eq({{v(soc), 1.0}, {v(act), -params[s]->efficiency}}, keep * soc0[s]);
            } else {
                prog.add_eq({{v(soc), 1.0}, {L::index(h - 1, soc), -keep}, {v(act), -params[s]->efficiency}}, 0.0);
            }
        }
        // ramp >= |E_t - E_{t-1}|
        if (h == 0) {
            prog.add_le({{v(L::Grid), 1.0}, {v(L::Ramp), -1.0}}, state.prev_grid_kw);
            prog.add_le({{v(L::Grid), -1.0}, {v(L::Ramp), -1.0}}, -state.prev_grid_kw);
        } else {
            const std::size_t prev = L::index(h - 1, L::Grid);
            prog.add_le({{v(L::Grid), 1.0}, {prev, -1.0}, {v(L::Ramp), -1.0}}, 0.0);
            prog.add_le({{v(L::Grid), -1.0}, {prev, 1.0}, {v(L::Ramp), -1.0}}, 0.0);
        }
    }
    return prog;
}

Plan plan(const PlannerState& state, const Forecast& forecast, const ParamVector& theta, const BuildingModel& model) {
    using L = LookaheadLayout;
    const lp::LinearProgram prog = build_lookahead_lp(state, forecast, theta, model);
    const lp::LpSolution sol = lp::solve(prog);
    Plan out;
    out.status = sol.status;
    if (sol.status != lp::Status::Optimal) return out;
    out.cost = -sol.objective_value;
    out.dual_degenerate = sol.dual_degenerate;
    out.min_reduced_cost = sol.min_reduced_cost;
    const std::size_t horizon = forecast.size();
    out.hours.reserve(horizon);
    const auto act = [](double a) { return std::clamp(a, -1.0, 1.0); };
    for (std::size_t h = 0; h < horizon; ++h) {
        const auto x = [&](L::Var var) { return sol.x[L::index(h, var)]; };
        PlannedHour p{};
        p.grid_kw = x(L::Grid);
        p.heat_pump_kw = x(L::HeatPump);
        p.heater_kw = x(L::Heater);
        p.soc_battery = x(L::SocBattery);
        p.soc_heat = x(L::SocHeat);
        p.soc_cool = x(L::SocCool);
        p.action = {act(x(L::ActBattery)), act(x(L::ActHeat)), act(x(L::ActCool))};
        p.ramp = x(L::Ramp);
        out.hours.push_back(p);
    }
    return out;
}

PolicyDecision policy_action(const PlannerState& state, const Forecast& forecast, const ParamVector& theta,
                             const BuildingModel& model) {
    const Plan p = plan(state, forecast, theta, model);
    switch (p.status) {
        case lp::Status::Optimal: return {p.hours.front().action, false};
        case lp::Status::Infeasible: return {Action{}, true};
        case lp::Status::Unbounded: break;
    }
    throw std::runtime_error("lookahead program is unbounded");
}

}  // namespace solpol
