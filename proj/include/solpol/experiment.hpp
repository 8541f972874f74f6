#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "solpol/blackbox.hpp"
#include "solpol/metrics.hpp"
#include "solpol/microgrid.hpp"

namespace solpol {

enum class RunMode { Zoirl, Rbc, Zero, EsUnguided, Blackbox };
enum class BaselineKind { Rbc, Zero };

std::string to_string(RunMode m);
std::string to_string(BaselineKind b);

struct TraceConfig {
    std::string source = "synthetic";  // "synthetic" or "csv"
    std::size_t n_buildings = 9;
    std::size_t n_weeks = 52;
    std::uint64_t seed = 2021;
    double noise = 0.1;
    std::string csv_path;
};

struct ScheduleConfig {
    std::size_t n_candidates = 3;
    double iota_initial = 0.4;
    double iota_decay_exponent = 2.0;
    double alpha = 1.0;
    int episodes_per_candidate = 1;
};

struct ThetaConfig {
    double lower = 0.0;
    double upper = 5.0;
    /// Starting point of every building's search; the box center when unset.
    std::optional<double> initial;
};

struct GuidanceConfig {
    std::size_t top_hours = 2;
    double value = 0.02;
};

/// Applied to every building after device sizing.
struct BuildingOverrides {
    std::optional<double> heater_efficiency;
    std::optional<double> storage_efficiency;
    std::optional<double> storage_decay;
    double capacity_scale = 1.0;
};

struct MismatchConfig {
    double extra_decay = 0.0;
    double demand_noise = 0.0;
    bool clip_actions = true;
};

struct BlackboxConfig {
    std::size_t seeds = 10;
    double iota_initial = 1.5;
    double iota_decay_exponent = 1.1;
    double noise = 0.05;
};

struct ExperimentConfig {
    std::string name = "run";
    std::uint64_t seed = 0;
    RunMode mode = RunMode::Zoirl;
    BaselineKind baseline = BaselineKind::Rbc;
    TraceConfig traces;
    ScheduleConfig schedule;
    ThetaConfig theta;
    GuidanceConfig guidance;
    BuildingOverrides building;
    MismatchConfig mismatch;
    std::size_t forecast_window_days = 14;
    RbcTable rbc_table = default_rbc_table();
    BlackboxConfig blackbox;
    std::string output_dir = "out";
};

/// Carries every problem found in a config, one message per violation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every field spelled out.
std::string config_to_json(const ExperimentConfig& config);
/// Applies "a.b.c=value" overrides; the value is parsed as JSON, falling back to a plain string.
ExperimentConfig apply_overrides(const ExperimentConfig& config, const std::vector<std::string>& overrides);
void validate(const ExperimentConfig& config);

struct LearningCurveRow {
    int iteration = 0;
    int week = 0;
    int building_id = 0;
    double best_reward = 0.0;
    double mean_reward = 0.0;
    MetricValues ratios;
    double total_score = 0.0;
};

struct RunOutputs {
    ExperimentConfig config;
    std::vector<LearningCurveRow> learning_curve;
    MetricValues baseline;
    MetricReport report;
    std::vector<std::string> events;
    /// Best parameters found per building (empty for fixed policies).
    std::vector<ParamVector> best_theta;
    std::size_t episodes = 0;
    std::size_t infeasible_plans = 0;
    std::size_t clipped_actions = 0;
    std::vector<BlackboxResult> blackbox;
};

std::vector<BuildingTrace> load_scenario(const TraceConfig& config);
std::vector<BuildingModel> build_models(const std::vector<BuildingTrace>& traces, const BuildingOverrides& overrides);

/// Planner policy with a fixed parameter vector per building; counts infeasible programs.
Policy planner_policy(std::vector<ParamVector> theta, std::size_t window_days, std::size_t* infeasible = nullptr);

/// Simulates the whole span day by day under `policy` and returns the district net series.
std::vector<double> simulate_span(const Microgrid& grid, const Policy& policy);

/// Executes one run in the configured mode. Blackbox mode delegates to run_blackbox_suite.
RunOutputs run_experiment(const ExperimentConfig& config);
RunOutputs run_blackbox_suite(const ExperimentConfig& config);

std::string learning_curve_header();
/// Writes learning_curve.csv, metrics.csv, events.log, theta.csv, config.json (and blackbox.csv).
void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir);

struct SweepAxis {
    std::string key;                  // dotted config path
    std::vector<std::string> values;  // JSON literals
};

struct SweepCell {
    std::vector<std::pair<std::string, std::string>> assignment;
    std::vector<std::uint64_t> seeds;
    std::vector<double> total_scores;
    std::vector<double> ramping_ratios;
    std::vector<std::string> failures;
    double mean_total_score = 0.0;
    double std_total_score = 0.0;
    double mean_ramping_ratio = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

/// Cartesian product of the axes (an empty grid gives the base config alone), each cell run for
/// `n_seeds` consecutive seeds starting at the base seed. Failures are recorded and the sweep continues.
/// Per-run outputs go to out_root/cell_<i>/seed_<s> unless out_root is empty.
SweepResult run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& grid, std::size_t n_seeds,
                      const std::filesystem::path& out_root = {});
std::string sweep_summary_csv(const SweepResult& result);
SweepAxis parse_sweep_axis(const std::string& spec);

}  // namespace solpol
