#include "solpol/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace solpol {

using Json = nlohmann::ordered_json;

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Zoirl: return "zoirl";
        case RunMode::Rbc: return "rbc";
        case RunMode::Zero: return "zero";
        case RunMode::EsUnguided: return "es_unguided";
        case RunMode::Blackbox: return "blackbox";
    }
    return "unknown";
}

std::string to_string(BaselineKind b) { return b == BaselineKind::Rbc ? "rbc" : "zero"; }

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string s = "invalid config:";
    for (const auto& p : problems) s += "\n  " + p;
    return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

// ---------------------------------------------------------------------------------------------
// Config parsing

namespace {

class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    // Reports keys of `obj` not listed in `allowed`; false if `obj` is not an object.
    bool object(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) {
            problems_.push_back(fmt::format("{}: expected an object", path.empty() ? "<root>" : path));
            return false;
        }
        std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items())
            if (!keys.count(k)) problems_.push_back(fmt::format("{}: unknown key", join(path, k)));
        return true;
    }

    void number(const Json& obj, const std::string& path, const char* key, double& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        if (!it->is_number()) {
            problems_.push_back(fmt::format("{}: expected a number", join(path, key)));
            return;
        }
        out = it->get<double>();
    }

    void optional_number(const Json& obj, const std::string& path, const char* key, std::optional<double>& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        if (it->is_null()) {
            out.reset();
            return;
        }
        double v = 0.0;
        number(obj, path, key, v);
        if (it->is_number()) out = v;
    }

    template <class Int>
    void integer(const Json& obj, const std::string& path, const char* key, Int& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        if (!it->is_number_integer() || (std::is_unsigned_v<Int> && it->is_number_integer() && !it->is_number_unsigned() &&
                                         it->get<std::int64_t>() < 0)) {
            problems_.push_back(fmt::format("{}: expected {} integer", join(path, key),
                                            std::is_unsigned_v<Int> ? "a nonnegative" : "an"));
            return;
        }
        out = it->get<Int>();
    }

    void boolean(const Json& obj, const std::string& path, const char* key, bool& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        if (!it->is_boolean()) {
            problems_.push_back(fmt::format("{}: expected true or false", join(path, key)));
            return;
        }
        out = it->get<bool>();
    }

    void string(const Json& obj, const std::string& path, const char* key, std::string& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        if (!it->is_string()) {
            problems_.push_back(fmt::format("{}: expected a string", join(path, key)));
            return;
        }
        out = it->get<std::string>();
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    std::vector<std::string>& problems() { return problems_; }

private:
    std::vector<std::string>& problems_;
};

void read_config(const Json& root, ExperimentConfig& c, Reader& r) {
    if (!r.object(root, "", {"name", "seed", "mode", "baseline", "traces", "schedule", "theta", "guidance", "building",
                             "mismatch", "forecast_window_days", "rbc_table", "blackbox", "output_dir"}))
        return;
    r.string(root, "", "name", c.name);
    r.integer(root, "", "seed", c.seed);
    std::string mode = to_string(c.mode);
    r.string(root, "", "mode", mode);
    static const std::map<std::string, RunMode> modes{{"zoirl", RunMode::Zoirl},
                                                      {"rbc", RunMode::Rbc},
                                                      {"zero", RunMode::Zero},
                                                      {"es_unguided", RunMode::EsUnguided},
                                                      {"blackbox", RunMode::Blackbox}};
    if (const auto it = modes.find(mode); it != modes.end()) c.mode = it->second;
    else r.problems().push_back(fmt::format("mode: '{}' is not one of zoirl, rbc, zero, es_unguided, blackbox", mode));
    std::string baseline = to_string(c.baseline);
    r.string(root, "", "baseline", baseline);
    if (baseline == "rbc") c.baseline = BaselineKind::Rbc;
    else if (baseline == "zero") c.baseline = BaselineKind::Zero;
    else r.problems().push_back(fmt::format("baseline: '{}' is not one of rbc, zero", baseline));

    if (const auto it = root.find("traces"); it != root.end() && r.object(*it, "traces", {"source", "n_buildings", "n_weeks", "seed", "noise", "csv_path"})) {
        r.string(*it, "traces", "source", c.traces.source);
        r.integer(*it, "traces", "n_buildings", c.traces.n_buildings);
        r.integer(*it, "traces", "n_weeks", c.traces.n_weeks);
        r.integer(*it, "traces", "seed", c.traces.seed);
        r.number(*it, "traces", "noise", c.traces.noise);
        r.string(*it, "traces", "csv_path", c.traces.csv_path);
    }
    if (const auto it = root.find("schedule"); it != root.end() &&
        r.object(*it, "schedule", {"n_candidates", "iota_initial", "iota_decay_exponent", "alpha", "episodes_per_candidate"})) {
        r.integer(*it, "schedule", "n_candidates", c.schedule.n_candidates);
        r.number(*it, "schedule", "iota_initial", c.schedule.iota_initial);
        r.number(*it, "schedule", "iota_decay_exponent", c.schedule.iota_decay_exponent);
        r.number(*it, "schedule", "alpha", c.schedule.alpha);
        r.integer(*it, "schedule", "episodes_per_candidate", c.schedule.episodes_per_candidate);
    }
    if (const auto it = root.find("theta"); it != root.end() && r.object(*it, "theta", {"lower", "upper", "initial"})) {
        r.number(*it, "theta", "lower", c.theta.lower);
        r.number(*it, "theta", "upper", c.theta.upper);
        r.optional_number(*it, "theta", "initial", c.theta.initial);
    }
    if (const auto it = root.find("guidance"); it != root.end() && r.object(*it, "guidance", {"top_hours", "value"})) {
        r.integer(*it, "guidance", "top_hours", c.guidance.top_hours);
        r.number(*it, "guidance", "value", c.guidance.value);
    }
    if (const auto it = root.find("building"); it != root.end() &&
        r.object(*it, "building", {"heater_efficiency", "storage_efficiency", "storage_decay", "capacity_scale"})) {
        r.optional_number(*it, "building", "heater_efficiency", c.building.heater_efficiency);
        r.optional_number(*it, "building", "storage_efficiency", c.building.storage_efficiency);
        r.optional_number(*it, "building", "storage_decay", c.building.storage_decay);
        r.number(*it, "building", "capacity_scale", c.building.capacity_scale);
    }
    if (const auto it = root.find("mismatch"); it != root.end() &&
        r.object(*it, "mismatch", {"extra_decay", "demand_noise", "clip_actions"})) {
        r.number(*it, "mismatch", "extra_decay", c.mismatch.extra_decay);
        r.number(*it, "mismatch", "demand_noise", c.mismatch.demand_noise);
        r.boolean(*it, "mismatch", "clip_actions", c.mismatch.clip_actions);
    }
    r.integer(root, "", "forecast_window_days", c.forecast_window_days);
    if (const auto it = root.find("rbc_table"); it != root.end()) {
        if (!it->is_array() || it->size() != static_cast<std::size_t>(kHoursPerDay)) {
            r.problems().push_back("rbc_table: expected an array of 24 numbers");
        } else {
            for (std::size_t h = 0; h < it->size(); ++h) {
                if (!(*it)[h].is_number()) r.problems().push_back(fmt::format("rbc_table[{}]: expected a number", h));
                else c.rbc_table[h] = (*it)[h].get<double>();
            }
        }
    }
    if (const auto it = root.find("blackbox"); it != root.end() &&
        r.object(*it, "blackbox", {"seeds", "iota_initial", "iota_decay_exponent", "noise"})) {
        r.integer(*it, "blackbox", "seeds", c.blackbox.seeds);
        r.number(*it, "blackbox", "iota_initial", c.blackbox.iota_initial);
        r.number(*it, "blackbox", "iota_decay_exponent", c.blackbox.iota_decay_exponent);
        r.number(*it, "blackbox", "noise", c.blackbox.noise);
    }
    r.string(root, "", "output_dir", c.output_dir);
}

std::vector<std::string> collect_violations(const ExperimentConfig& c) {
    std::vector<std::string> p;
    const auto need = [&p](bool ok, std::string msg) {
        if (!ok) p.push_back(std::move(msg));
    };
    const auto finite = [](double x) { return std::isfinite(x); };
    need(!c.name.empty(), "name: must not be empty");
    need(c.traces.source == "synthetic" || c.traces.source == "csv", "traces.source: must be synthetic or csv");
    need(c.traces.source != "csv" || !c.traces.csv_path.empty(), "traces.csv_path: required when source is csv");
    need(c.traces.n_buildings >= 1, "traces.n_buildings: must be >= 1");
    need(c.traces.n_weeks >= 1, "traces.n_weeks: must be >= 1");
    need(c.traces.noise >= 0.0 && c.traces.noise < 1.0, "traces.noise: must be in [0, 1)");
    need(c.schedule.n_candidates >= 1, "schedule.n_candidates: must be >= 1");
    need(c.schedule.iota_initial > 0.0 && finite(c.schedule.iota_initial), "schedule.iota_initial: must be > 0");
    need(c.schedule.iota_decay_exponent >= 0.0 && finite(c.schedule.iota_decay_exponent),
         "schedule.iota_decay_exponent: must be >= 0");
    need(c.schedule.alpha >= 0.0 && finite(c.schedule.alpha), "schedule.alpha: must be >= 0");
    need(c.schedule.episodes_per_candidate >= 1, "schedule.episodes_per_candidate: must be >= 1");
    need(finite(c.theta.lower) && finite(c.theta.upper) && c.theta.lower < c.theta.upper,
         "theta: lower must be below upper");
    need(!c.theta.initial || (*c.theta.initial >= c.theta.lower && *c.theta.initial <= c.theta.upper),
         "theta.initial: must lie within [lower, upper]");
    need(c.guidance.top_hours >= 1 && c.guidance.top_hours < static_cast<std::size_t>(kHoursPerDay),
         "guidance.top_hours: must be in [1, 23]");
    need(finite(c.guidance.value), "guidance.value: must be finite");
    const auto unit = [](const std::optional<double>& v, bool allow_zero) {
        return !v || (allow_zero ? (*v >= 0.0 && *v < 1.0) : (*v > 0.0 && *v <= 1.0));
    };
    need(unit(c.building.heater_efficiency, false), "building.heater_efficiency: must be in (0, 1]");
    need(unit(c.building.storage_efficiency, false), "building.storage_efficiency: must be in (0, 1]");
    need(unit(c.building.storage_decay, true), "building.storage_decay: must be in [0, 1)");
    need(c.building.capacity_scale >= 0.0 && finite(c.building.capacity_scale), "building.capacity_scale: must be >= 0");
    need(c.mismatch.extra_decay >= 0.0 && c.mismatch.extra_decay < 1.0, "mismatch.extra_decay: must be in [0, 1)");
    need(c.mismatch.demand_noise >= 0.0 && c.mismatch.demand_noise < 1.0, "mismatch.demand_noise: must be in [0, 1)");
    need(c.forecast_window_days >= 1, "forecast_window_days: must be >= 1");
    for (std::size_t h = 0; h < c.rbc_table.size(); ++h)
        need(c.rbc_table[h] >= -1.0 && c.rbc_table[h] <= 1.0, fmt::format("rbc_table[{}]: must be in [-1, 1]", h));
    need(c.blackbox.seeds >= 1, "blackbox.seeds: must be >= 1");
    need(c.blackbox.iota_initial > 0.0 && finite(c.blackbox.iota_initial), "blackbox.iota_initial: must be > 0");
    need(c.blackbox.iota_decay_exponent >= 0.0 && finite(c.blackbox.iota_decay_exponent),
         "blackbox.iota_decay_exponent: must be >= 0");
    need(c.blackbox.noise >= 0.0 && finite(c.blackbox.noise), "blackbox.noise: must be >= 0");
    need(!c.output_dir.empty(), "output_dir: must not be empty");
    return p;
}

}  // namespace

void validate(const ExperimentConfig& config) {
    auto problems = collect_violations(config);
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

ExperimentConfig parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError({fmt::format("malformed JSON: {}", e.what())});
    }
    ExperimentConfig c;
    std::vector<std::string> problems;
    Reader reader(problems);
    read_config(root, c, reader);
    for (auto& v : collect_violations(c)) problems.push_back(std::move(v));
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({fmt::format("cannot open config file {}", path.string())});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

Json config_json(const ExperimentConfig& c) {
    const auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["mode"] = to_string(c.mode);
    j["baseline"] = to_string(c.baseline);
    j["traces"] = {{"source", c.traces.source}, {"n_buildings", c.traces.n_buildings}, {"n_weeks", c.traces.n_weeks},
                   {"seed", c.traces.seed},     {"noise", c.traces.noise},             {"csv_path", c.traces.csv_path}};
    j["schedule"] = {{"n_candidates", c.schedule.n_candidates},
                     {"iota_initial", c.schedule.iota_initial},
                     {"iota_decay_exponent", c.schedule.iota_decay_exponent},
                     {"alpha", c.schedule.alpha},
                     {"episodes_per_candidate", c.schedule.episodes_per_candidate}};
    j["theta"] = {{"lower", c.theta.lower}, {"upper", c.theta.upper}, {"initial", opt(c.theta.initial)}};
    j["guidance"] = {{"top_hours", c.guidance.top_hours}, {"value", c.guidance.value}};
    j["building"] = {{"heater_efficiency", opt(c.building.heater_efficiency)},
                     {"storage_efficiency", opt(c.building.storage_efficiency)},
                     {"storage_decay", opt(c.building.storage_decay)},
                     {"capacity_scale", c.building.capacity_scale}};
    j["mismatch"] = {{"extra_decay", c.mismatch.extra_decay},
                     {"demand_noise", c.mismatch.demand_noise},
                     {"clip_actions", c.mismatch.clip_actions}};
    j["forecast_window_days"] = c.forecast_window_days;
    j["rbc_table"] = Json::array();
    for (double a : c.rbc_table) j["rbc_table"].push_back(a);
    j["blackbox"] = {{"seeds", c.blackbox.seeds},
                     {"iota_initial", c.blackbox.iota_initial},
                     {"iota_decay_exponent", c.blackbox.iota_decay_exponent},
                     {"noise", c.blackbox.noise}};
    j["output_dir"] = c.output_dir;
    return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

ExperimentConfig apply_overrides(const ExperimentConfig& config, const std::vector<std::string>& overrides) {
    Json j = config_json(config);
    std::vector<std::string> problems;
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) {
            problems.push_back(fmt::format("override '{}': expected key=value", ov));
            continue;
        }
        const std::string key = ov.substr(0, eq);
        const std::string text = ov.substr(eq + 1);
        Json value;
        try {
            value = Json::parse(text);
        } catch (const Json::parse_error&) {
            value = text;
        }
        Json* node = &j;
        std::size_t start = 0;
        bool ok = true;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(part)) {
                problems.push_back(fmt::format("override '{}': unknown key", key));
                ok = false;
                break;
            }
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        if (ok) *node = value;
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return parse_config(j.dump());
}

// ---------------------------------------------------------------------------------------------
// Scenario

std::vector<BuildingTrace> load_scenario(const TraceConfig& config) {
    if (config.source == "csv") return load_traces_csv(config.csv_path);
    return generate_synthetic_traces(config.n_buildings, config.n_weeks, config.seed, config.noise);
}

std::vector<BuildingModel> build_models(const std::vector<BuildingTrace>& traces, const BuildingOverrides& o) {
    std::vector<BuildingModel> models;
    models.reserve(traces.size());
    for (const auto& t : traces) {
        const BuildingModel sized = size_model(t);
        BuildingModel m = sized;
        if (o.heater_efficiency) m.heater_efficiency = *o.heater_efficiency;
        for (StorageParams* s : {&m.battery, &m.heat_storage, &m.cooling_storage}) {
            if (o.storage_efficiency) s->efficiency = *o.storage_efficiency;
            if (o.storage_decay) s->decay = *o.storage_decay;
            s->capacity *= o.capacity_scale;
        }
        // keep the heater's thermal output unchanged under an efficiency override
        m.heater_max_kw = sized.heater_max_kw * sized.heater_efficiency / m.heater_efficiency;
        m.validate();
        models.push_back(m);
    }
    return models;
}

namespace {

struct PlannerCounters {
    std::size_t infeasible = 0;
    std::vector<std::string>* events = nullptr;
};

std::vector<Action> planner_actions(const Microgrid& grid, const EnvState& env, const std::vector<ParamVector>& theta,
                                    std::size_t window_days, PlannerCounters* counters) {
    const std::size_t hod = env.hour % kHoursPerDay;
    const std::size_t horizon = kHoursPerDay - hod;
    std::vector<Action> actions;
    actions.reserve(grid.num_buildings());
    for (std::size_t b = 0; b < grid.num_buildings(); ++b) {
        const BuildingModel& model = grid.model(b);
        const Forecast fc = forecast_moving_average(grid.history(b, env.hour),
                                                    grid.realized(b).outdoor_temp_c[env.hour], model, horizon,
                                                    window_days);
        const PolicyDecision d = policy_action(grid.planner_state(env, b), fc, theta.at(b), model);
        if (d.infeasible && counters) {
            ++counters->infeasible;
            if (counters->events)
                counters->events->push_back(fmt::format("infeasible_plan day={} hour={} building={}",
                                                        env.hour / kHoursPerDay, hod + 1,
                                                        grid.realized(b).building_id));
        }
        actions.push_back(d.action);
    }
    return actions;
}

Policy baseline_policy(BaselineKind kind, const RbcTable& table) {
    return kind == BaselineKind::Rbc ? rbc_policy(table) : zero_policy();
}

struct SpanRecorder {
    std::vector<double> district;
    std::size_t clipped = 0;

    void add(const EpisodeTrace& trace) {
        for (const auto& h : trace.hours) district.push_back(h.district_net_kw);
        clipped += trace.clipped_steps();
    }
};

MetricValues span_metrics(std::span<const double> e, std::span<const double> intensity) {
    return compute_metrics(e, intensity.first(e.size()));
}

// Running ratios over the first `hours` hours of both series.
MetricReport prefix_report(const std::vector<double>& agent, const std::vector<double>& baseline,
                           std::span<const double> intensity, std::size_t hours) {
    const std::span<const double> a(agent.data(), hours), b(baseline.data(), hours);
    try {
        return score_ratios(span_metrics(a, intensity), span_metrics(b, intensity));
    } catch (const std::domain_error&) {
        MetricReport r;
        r.raw = span_metrics(a, intensity);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.ratio = MetricValues{nan, nan, nan, nan, nan, nan};
        r.total_score = r.coordination_score = nan;
        return r;
    }
}

}  // namespace

Policy planner_policy(std::vector<ParamVector> theta, std::size_t window_days, std::size_t* infeasible) {
    return [theta = std::move(theta), window_days, infeasible](const Microgrid& grid, const EnvState& env) {
        PlannerCounters counters;
        auto actions = planner_actions(grid, env, theta, window_days, &counters);
        if (infeasible) *infeasible += counters.infeasible;
        return actions;
    };
}

std::vector<double> simulate_span(const Microgrid& grid, const Policy& policy) {
    SpanRecorder rec;
    EnvState state = grid.initial_state();
    const std::size_t days = grid.hours() / kHoursPerDay;
    for (std::size_t d = 0; d < days; ++d) {
        EpisodeResult r = run_episode(grid, state, policy);
        rec.add(r.trace);
        state = std::move(r.final_state);
    }
    return rec.district;
}

// ---------------------------------------------------------------------------------------------
// Runs

namespace {

Microgrid make_grid(const ExperimentConfig& config) {
    auto traces = load_scenario(config.traces);
    auto models = build_models(traces, config.building);
    SimOptions opt;
    opt.clip_actions = config.mismatch.clip_actions;
    opt.extra_decay = config.mismatch.extra_decay;
    opt.demand_noise = config.mismatch.demand_noise;
    opt.noise_seed = config.seed;
    Microgrid grid(std::move(traces), std::move(models), opt);
    if (grid.hours() < static_cast<std::size_t>(kHoursPerDay)) throw std::runtime_error("scenario is shorter than one day");
    return grid;
}

void fixed_policy_run(const Microgrid& grid, const Policy& policy, RunOutputs& out, const std::vector<double>& baseline) {
    SpanRecorder rec;
    EnvState state = grid.initial_state();
    const std::size_t days = grid.hours() / kHoursPerDay;
    double week_reward = 0.0;
    std::size_t week_days = 0;
    for (std::size_t d = 0; d < days; ++d) {
        EpisodeResult r = run_episode(grid, state, policy);
        rec.add(r.trace);
        state = std::move(r.final_state);
        week_reward += r.reward;
        ++week_days;
        ++out.episodes;
        if (week_days == 7 || d + 1 == days) {
            const MetricReport rep = prefix_report(rec.district, baseline, grid.carbon_intensity(), rec.district.size());
            LearningCurveRow row;
            row.iteration = static_cast<int>(d / 7 + 1);
            row.week = static_cast<int>(d / 7 + 1);
            row.building_id = 0;
            row.best_reward = row.mean_reward = week_reward / static_cast<double>(week_days);
            row.ratios = rep.ratio;
            row.total_score = rep.total_score;
            out.learning_curve.push_back(row);
            week_reward = 0.0;
            week_days = 0;
        }
    }
    out.clipped_actions = rec.clipped;
    out.report = score_ratios(span_metrics(rec.district, grid.carbon_intensity()), out.baseline);
}

void es_run(const ExperimentConfig& config, const Microgrid& grid, RunOutputs& out, const std::vector<double>& baseline) {
    const std::size_t nb = grid.num_buildings();
    const auto d = static_cast<Eigen::Index>(kHoursPerDay);
    const BoxDomain box(ParamVector::Constant(d, config.theta.lower), ParamVector::Constant(d, config.theta.upper));
    const ParamVector z0 = config.theta.initial ? ParamVector::Constant(d, *config.theta.initial) : box.center();
    const double alpha = config.mode == RunMode::EsUnguided ? 0.0 : config.schedule.alpha;
    const std::size_t days = grid.hours() / kHoursPerDay;
    const EsSchedule schedule = EsSchedule::power_decay(config.schedule.n_candidates, config.schedule.iota_initial,
                                                        config.schedule.iota_decay_exponent, alpha,
                                                        static_cast<int>(days) + 1);
    const int episodes = config.schedule.episodes_per_candidate;

    std::vector<Rng> rngs;
    std::vector<EsState> states;
    rngs.reserve(nb);
    states.reserve(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        std::seed_seq seq{config.seed, std::uint64_t{b}};
        rngs.emplace_back(seq);
        states.push_back(init_state(z0, box, schedule, rngs.back()));
    }
    std::vector<std::vector<double>> rewards(nb);
    std::vector<std::vector<GuidanceSignal>> guidance(nb);
    std::vector<double> reward_acc(nb, 0.0);
    std::vector<GuidanceSignal> rho_acc(nb, GuidanceSignal::Zero(d));

    PlannerCounters counters;
    counters.events = &out.events;
    SpanRecorder rec;
    EnvState env = grid.initial_state();
    std::size_t candidate = 0;
    int episode = 0;
    for (std::size_t day = 0; day < days; ++day) {
        std::vector<ParamVector> theta(nb);
        for (std::size_t b = 0; b < nb; ++b) theta[b] = states[b].pending.at(candidate);
        const Policy policy = [&](const Microgrid& g, const EnvState& s) {
            return planner_actions(g, s, theta, config.forecast_window_days, &counters);
        };
        EpisodeResult r = run_episode(grid, env, policy);
        rec.add(r.trace);
        env = std::move(r.final_state);
        ++out.episodes;
        if (const std::size_t clipped = r.trace.clipped_steps(); clipped > 0)
            out.events.push_back(fmt::format("clipped_actions day={} count={}", day, clipped));

        for (std::size_t b = 0; b < nb; ++b) {
            reward_acc[b] += r.trace.building_reward(b);
            rho_acc[b] += peak_guidance(r.trace, b, config.guidance.top_hours, config.guidance.value);
        }
        if (++episode < episodes) continue;
        episode = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            rewards[b].push_back(reward_acc[b] / episodes);
            guidance[b].push_back(rho_acc[b] / episodes);
            reward_acc[b] = 0.0;
            rho_acc[b].setZero();
        }
        if (++candidate < states.front().pending.size()) continue;
        candidate = 0;

        const MetricReport rep = prefix_report(rec.district, baseline, grid.carbon_intensity(), rec.district.size());
        for (std::size_t b = 0; b < nb; ++b) {
            const int k = states[b].iteration;
            states[b] = complete_iteration(std::move(states[b]), std::move(rewards[b]), std::move(guidance[b]), box,
                                           schedule, rngs[b]);
            rewards[b].clear();
            guidance[b].clear();
            LearningCurveRow row;
            row.iteration = k;
            row.week = static_cast<int>(day / 7 + 1);
            row.building_id = grid.realized(b).building_id;
            row.best_reward = states[b].best_reward;
            row.mean_reward = states[b].history.back().mean_reward;
            row.ratios = rep.ratio;
            row.total_score = rep.total_score;
            out.learning_curve.push_back(row);
        }
        out.events.push_back(fmt::format("update iteration={} day={}", states.front().iteration - 1, day));
    }
    out.infeasible_plans = counters.infeasible;
    out.clipped_actions = rec.clipped;
    for (const auto& s : states) out.best_theta.push_back(s.best);
    out.report = score_ratios(span_metrics(rec.district, grid.carbon_intensity()), out.baseline);
}

}  // namespace

RunOutputs run_experiment(const ExperimentConfig& config) {
    validate(config);
    if (config.mode == RunMode::Blackbox) return run_blackbox_suite(config);
    RunOutputs out;
    out.config = config;
    const Microgrid grid = make_grid(config);
    const std::vector<double> baseline = simulate_span(grid, baseline_policy(config.baseline, config.rbc_table));
    out.baseline = span_metrics(baseline, grid.carbon_intensity());
    switch (config.mode) {
        case RunMode::Rbc: fixed_policy_run(grid, rbc_policy(config.rbc_table), out, baseline); break;
        case RunMode::Zero: fixed_policy_run(grid, zero_policy(), out, baseline); break;
        case RunMode::Zoirl:
        case RunMode::EsUnguided: es_run(config, grid, out, baseline); break;
        case RunMode::Blackbox: break;
    }
    return out;
}

RunOutputs run_blackbox_suite(const ExperimentConfig& config) {
    validate(config);
    RunOutputs out;
    out.config = config;
    struct Case {
        TestFunction fn;
        int iterations;
        double noise;
        double alpha;
        double gain;
    };
    const double noise = config.blackbox.noise;
    const std::vector<Case> cases{
        {quadratic_function(), 40, 0.0, 0.0, 0.0}, {quadratic_function(), 40, noise, 0.0, 0.0},
        {quadratic_function(), 40, 0.0, 1.0, 0.5}, {two_peak_function(), 60, 0.0, 0.0, 0.0},
        {two_peak_function(), 60, noise, 0.0, 0.0}, {rastrigin_function(), 60, 0.0, 0.0, 0.0},
        {rastrigin_function(), 60, noise, 0.0, 0.0},
    };
    for (const auto& c : cases) {
        for (std::size_t s = 0; s < config.blackbox.seeds; ++s) {
            BlackboxSpec spec{c.fn, c.iterations, c.noise, c.alpha, c.gain, config.blackbox.iota_initial,
                              config.blackbox.iota_decay_exponent};
            BlackboxResult r = run_blackbox(spec, config.seed + s);
            out.events.push_back(fmt::format("blackbox function={} noise={} alpha={} seed={} done", r.function, r.noise,
                                             r.alpha, r.seed));
            r.es.history.clear();  // keep outputs compact
            out.blackbox.push_back(std::move(r));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Output files

std::string learning_curve_header() {
    return "iteration,week,building_id,best_reward,mean_reward,ramping_ratio,load_factor_ratio,avg_peak_ratio,"
           "peak_ratio,consumption_ratio,carbon_ratio,total_score";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_outputs(const RunOutputs& o, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "config.json", config_to_json(o.config));
    std::string events;
    for (const auto& e : o.events) events += e + "\n";
    write_file(dir / "events.log", events);

    if (o.config.mode == RunMode::Blackbox) {
        std::string csv = "function,noise,alpha,seed,best,best_error,concentration,iterations_to_accuracy\n";
        for (const auto& r : o.blackbox) {
            std::string best;
            for (Eigen::Index i = 0; i < r.best.size(); ++i) best += fmt::format("{}{}", i ? ";" : "", r.best[i]);
            csv += fmt::format("{},{},{},{},{},{},{},{}\n", r.function, r.noise, r.alpha, r.seed, best, r.best_error,
                               r.concentration, r.iterations_to_accuracy);
        }
        write_file(dir / "blackbox.csv", csv);
        return;
    }

    std::string lc = learning_curve_header() + "\n";
    for (const auto& r : o.learning_curve) {
        const auto ratios = r.ratios.as_array();
        lc += fmt::format("{},{},{},{},{}", r.iteration, r.week, r.building_id, r.best_reward, r.mean_reward);
        for (double x : ratios) lc += fmt::format(",{}", x);
        lc += fmt::format(",{}\n", r.total_score);
    }
    write_file(dir / "learning_curve.csv", lc);

    std::string metrics = "kind," + metrics_csv_header() + "\n";
    metrics += "agent," + metrics_csv_row(o.report) + "\n";
    metrics += "baseline," + metrics_csv_row(score_ratios(o.baseline, o.baseline)) + "\n";
    write_file(dir / "metrics.csv", metrics);

    std::string theta = "building_id";
    for (int h = 1; h <= kHoursPerDay; ++h) theta += fmt::format(",theta_{}", h);
    theta += "\n";
    for (std::size_t b = 0; b < o.best_theta.size(); ++b) {
        theta += fmt::format("{}", b + 1);
        for (Eigen::Index h = 0; h < o.best_theta[b].size(); ++h) theta += fmt::format(",{}", o.best_theta[b][h]);
        theta += "\n";
    }
    write_file(dir / "theta.csv", theta);
}

// ---------------------------------------------------------------------------------------------
// Sweeps

SweepAxis parse_sweep_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw ConfigError({fmt::format("sweep axis '{}': expected key=v1,v2,...", spec)});
    SweepAxis axis;
    axis.key = spec.substr(0, eq);
    std::stringstream ss(spec.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ',')) {
        if (v.empty()) throw ConfigError({fmt::format("sweep axis '{}': empty value", spec)});
        axis.values.push_back(v);
    }
    return axis;
}

SweepResult run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& grid, std::size_t n_seeds,
                      const std::filesystem::path& out_root) {
    if (n_seeds == 0) throw std::invalid_argument("sweep needs at least one seed");
    for (const auto& axis : grid)
        if (axis.values.empty()) throw ConfigError({fmt::format("sweep axis '{}' has no values", axis.key)});

    std::vector<std::vector<std::pair<std::string, std::string>>> assignments{{}};
    for (const auto& axis : grid) {
        std::vector<std::vector<std::pair<std::string, std::string>>> next;
        for (const auto& a : assignments)
            for (const auto& v : axis.values) {
                auto b = a;
                b.emplace_back(axis.key, v);
                next.push_back(std::move(b));
            }
        assignments = std::move(next);
    }

    SweepResult result;
    for (std::size_t ci = 0; ci < assignments.size(); ++ci) {
        SweepCell cell;
        cell.assignment = assignments[ci];
        std::vector<std::string> overrides;
        for (const auto& [k, v] : cell.assignment) overrides.push_back(k + "=" + v);
        std::optional<ExperimentConfig> cfg;
        try {
            cfg = apply_overrides(base, overrides);
        } catch (const std::exception& e) {
            cell.failures.push_back(e.what());
        }
        for (std::size_t s = 0; cfg && s < n_seeds; ++s) {
            ExperimentConfig run_cfg = *cfg;
            run_cfg.seed = base.seed + s;
            cell.seeds.push_back(run_cfg.seed);
            try {
                RunOutputs o = run_experiment(run_cfg);
                cell.total_scores.push_back(o.report.total_score);
                cell.ramping_ratios.push_back(o.report.ratio.ramping);
                if (!out_root.empty()) write_outputs(o, out_root / fmt::format("cell_{}", ci) / fmt::format("seed_{}", run_cfg.seed));
            } catch (const std::exception& e) {
                cell.failures.push_back(fmt::format("seed {}: {}", run_cfg.seed, e.what()));
            }
        }
        const auto n = static_cast<double>(cell.total_scores.size());
        if (n > 0) {
            cell.mean_total_score = std::accumulate(cell.total_scores.begin(), cell.total_scores.end(), 0.0) / n;
            cell.mean_ramping_ratio = std::accumulate(cell.ramping_ratios.begin(), cell.ramping_ratios.end(), 0.0) / n;
            double ss = 0.0;
            for (double x : cell.total_scores) ss += (x - cell.mean_total_score) * (x - cell.mean_total_score);
            cell.std_total_score = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        } else {
            cell.mean_total_score = cell.mean_ramping_ratio = cell.std_total_score =
                std::numeric_limits<double>::quiet_NaN();
        }
        result.cells.push_back(std::move(cell));
    }
    return result;
}

std::string sweep_summary_csv(const SweepResult& result) {
    std::string csv = "cell,assignment,n_ok,n_failed,mean_total_score,std_total_score,mean_ramping_ratio,failures\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const SweepCell& c = result.cells[i];
        std::string assignment;
        for (const auto& [k, v] : c.assignment) assignment += fmt::format("{}{}={}", assignment.empty() ? "" : ";", k, v);
        std::string failures;
        for (const auto& f : c.failures) failures += (failures.empty() ? "" : " | ") + f;
        std::replace(failures.begin(), failures.end(), ',', ';');
        std::replace(failures.begin(), failures.end(), '\n', ' ');
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", i, assignment.empty() ? "base" : assignment,
                           c.total_scores.size(), c.failures.size(), c.mean_total_score, c.std_total_score,
                           c.mean_ramping_ratio, failures);
    }
    return csv;
}

}  // namespace solpol
