#include <algorithm>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "solpol/experiment.hpp"

using namespace solpol;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(RunMode mode) {
    ExperimentConfig c;
    c.mode = mode;
    c.traces.n_buildings = 2;
    c.traces.n_weeks = 1;
    c.seed = 3;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("solpol_test_" + name);
    fs::remove_all(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SOLPOL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsMatchPublishedHyperparameters) {
    const ExperimentConfig c;
    EXPECT_EQ(c.schedule.n_candidates, 3u);
    EXPECT_EQ(c.schedule.iota_initial, 0.4);
    EXPECT_EQ(c.schedule.iota_decay_exponent, 2.0);
    EXPECT_EQ(c.schedule.alpha, 1.0);
    EXPECT_EQ(c.theta.lower, 0.0);
    EXPECT_EQ(c.theta.upper, 5.0);
    EXPECT_EQ(c.guidance.top_hours, 2u);
    EXPECT_EQ(c.guidance.value, 0.02);
    EXPECT_EQ(c.traces.n_buildings, 9u);
    EXPECT_EQ(c.traces.n_weeks, 52u);
    EXPECT_EQ(c.mode, RunMode::Zoirl);
    EXPECT_EQ(c.baseline, BaselineKind::Rbc);
}

TEST(Config, ParseAndEcho) {
    const auto c = parse_config(R"({"name": "x", "seed": 9, "mode": "rbc", "schedule": {"n_candidates": 5},
                                    "theta": {"initial": 1.5}, "mismatch": {"clip_actions": false}})");
    EXPECT_EQ(c.name, "x");
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.mode, RunMode::Rbc);
    EXPECT_EQ(c.schedule.n_candidates, 5u);
    EXPECT_EQ(c.theta.initial, 1.5);
    EXPECT_FALSE(c.mismatch.clip_actions);
    EXPECT_EQ(config_to_json(parse_config(config_to_json(c))), config_to_json(c));
}

TEST(Config, UnknownKeysRejected) {
    try {
        parse_config(R"({"seed": 1, "schedul": {}, "theta": {"lower": 0, "uper": 3}})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        ASSERT_EQ(e.problems().size(), 2u);
        EXPECT_NE(e.problems()[0].find("schedul"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("theta.uper"), std::string::npos);
    }
}

TEST(Config, EveryViolationIsListed) {
    try {
        parse_config(R"({"mode": "fast", "schedule": {"n_candidates": 0, "iota_initial": -1},
                         "theta": {"lower": 3, "upper": 1}, "guidance": {"top_hours": 30}, "seed": "abc"})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string all = e.what();
        EXPECT_GE(e.problems().size(), 6u) << all;
        for (const char* key : {"mode", "n_candidates", "iota_initial", "theta", "top_hours", "seed"})
            EXPECT_NE(all.find(key), std::string::npos) << key << " missing from: " << all;
    }
}

TEST(Config, MalformedJson) { EXPECT_THROW(parse_config("{\"seed\": "), ConfigError); }

TEST(Config, Overrides) {
    const ExperimentConfig base;
    const auto c = apply_overrides(base, {"schedule.n_candidates=7", "name=sweep cell", "mismatch.clip_actions=false",
                                          "theta.initial=2"});
    EXPECT_EQ(c.schedule.n_candidates, 7u);
    EXPECT_EQ(c.name, "sweep cell");
    EXPECT_FALSE(c.mismatch.clip_actions);
    EXPECT_EQ(c.theta.initial, 2.0);
    EXPECT_THROW(apply_overrides(base, {"schedule.bogus=1"}), ConfigError);
    EXPECT_THROW(apply_overrides(base, {"novalue"}), ConfigError);
    EXPECT_THROW(apply_overrides(base, {"schedule.n_candidates=0"}), ConfigError);
}

TEST(Experiment, ZeroModeAgainstItselfScoresOne) {
    auto c = small_config(RunMode::Zero);
    c.baseline = BaselineKind::Zero;
    const auto o = run_experiment(c);
    EXPECT_EQ(o.report.total_score, 1.0);
    for (double r : o.report.ratio.as_array()) EXPECT_EQ(r, 1.0);
    EXPECT_EQ(o.episodes, 7u);
}

TEST(Experiment, RbcAgainstRbcScoresOne) {
    const auto o = run_experiment(small_config(RunMode::Rbc));
    EXPECT_EQ(o.report.total_score, 1.0);
    EXPECT_EQ(o.learning_curve.size(), 1u);
}

TEST(Experiment, OneCandidatePerDayAndUpdateEveryN) {
    auto c = small_config(RunMode::Zoirl);
    const auto o = run_experiment(c);
    // seven days with three candidates: updates after days 3 and 6
    EXPECT_EQ(o.episodes, 7u);
    ASSERT_EQ(o.learning_curve.size(), 4u);
    EXPECT_EQ(o.learning_curve[0].iteration, 1);
    EXPECT_EQ(o.learning_curve[2].iteration, 2);
    std::size_t updates = 0;
    for (const auto& e : o.events) updates += e.rfind("update ", 0) == 0;
    EXPECT_EQ(updates, 2u);
    EXPECT_NE(std::find(o.events.begin(), o.events.end(), "update iteration=1 day=2"), o.events.end());
    EXPECT_EQ(o.best_theta.size(), 2u);
    for (const auto& t : o.best_theta) {
        EXPECT_EQ(t.size(), 24);
        EXPECT_GE(t.minCoeff(), 0.0);
        EXPECT_LE(t.maxCoeff(), 5.0);
    }
}

TEST(Experiment, EpisodesPerCandidateStretchesUpdates) {
    auto c = small_config(RunMode::EsUnguided);
    c.schedule.n_candidates = 2;
    c.schedule.episodes_per_candidate = 2;
    const auto o = run_experiment(c);
    std::size_t updates = 0;
    for (const auto& e : o.events) updates += e.rfind("update ", 0) == 0;
    EXPECT_EQ(updates, 1u);
}

TEST(Experiment, OutputsAreByteIdenticalAcrossRuns) {
    for (RunMode mode : {RunMode::Zoirl, RunMode::EsUnguided, RunMode::Rbc, RunMode::Zero}) {
        auto c = small_config(mode);
        c.mismatch.demand_noise = 0.05;
        const auto a = scratch("det_a"), b = scratch("det_b");
        write_outputs(run_experiment(c), a);
        write_outputs(run_experiment(c), b);
        std::size_t files = 0;
        for (const auto& f : fs::directory_iterator(a)) {
            EXPECT_EQ(slurp(f.path()), slurp(b / f.path().filename())) << f.path();
            ++files;
        }
        EXPECT_EQ(files, 5u);
        EXPECT_EQ(slurp(a / "learning_curve.csv").substr(0, learning_curve_header().size()), learning_curve_header());
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Experiment, LearningCurveHeader) {
    EXPECT_EQ(learning_curve_header(),
              "iteration,week,building_id,best_reward,mean_reward,ramping_ratio,load_factor_ratio,avg_peak_ratio,"
              "peak_ratio,consumption_ratio,carbon_ratio,total_score");
}

TEST(Experiment, CsvScenario) {
    const auto dir = scratch("csv");
    fs::create_directories(dir);
    save_traces_csv(generate_synthetic_traces(2, 1, 4), dir / "t.csv");
    auto c = small_config(RunMode::Rbc);
    c.traces.source = "csv";
    c.traces.csv_path = (dir / "t.csv").string();
    EXPECT_EQ(run_experiment(c).episodes, 7u);
    c.traces.csv_path = (dir / "missing.csv").string();
    EXPECT_THROW(run_experiment(c), TraceError);
    fs::remove_all(dir);
}

TEST(Experiment, BlackboxSuite) {
    auto c = small_config(RunMode::Blackbox);
    c.blackbox.seeds = 2;
    const auto o = run_experiment(c);
    EXPECT_EQ(o.blackbox.size(), 14u);
    const auto dir = scratch("bb");
    write_outputs(o, dir);
    EXPECT_TRUE(fs::exists(dir / "blackbox.csv"));
    fs::remove_all(dir);
}

TEST(Sweep, AxisParsing) {
    const auto a = parse_sweep_axis("schedule.iota_initial=0.1,0.3,0.5");
    EXPECT_EQ(a.key, "schedule.iota_initial");
    EXPECT_EQ(a.values, (std::vector<std::string>{"0.1", "0.3", "0.5"}));
    EXPECT_THROW(parse_sweep_axis("schedule.iota_initial"), ConfigError);
    EXPECT_THROW(parse_sweep_axis("k=1,,2"), ConfigError);
}

TEST(Sweep, EmptyGridIsSingleBaseRun) {
    const auto r = run_sweep(small_config(RunMode::Rbc), {}, 2);
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_EQ(r.cells[0].seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(r.cells[0].mean_total_score, 1.0);
    EXPECT_EQ(r.cells[0].std_total_score, 0.0);
}

TEST(Sweep, CartesianProductCardinality) {
    const std::vector<SweepAxis> grid{parse_sweep_axis("schedule.iota_initial=0.1,0.3,0.5"),
                                      parse_sweep_axis("schedule.n_candidates=3,5,7")};
    const auto r = run_sweep(small_config(RunMode::Rbc), grid, 1);
    ASSERT_EQ(r.cells.size(), 9u);
    const auto csv = sweep_summary_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
    EXPECT_EQ(r.cells[4].assignment[0].second, "0.3");
    EXPECT_EQ(r.cells[4].assignment[1].second, "5");
}

TEST(Sweep, FailuresAreRecordedAndSweepContinues) {
    const std::vector<SweepAxis> grid{parse_sweep_axis("schedule.n_candidates=0,3")};
    const auto r = run_sweep(small_config(RunMode::Rbc), grid, 1);
    ASSERT_EQ(r.cells.size(), 2u);
    EXPECT_EQ(r.cells[0].failures.size(), 1u);
    EXPECT_TRUE(r.cells[0].total_scores.empty());
    EXPECT_EQ(r.cells[1].total_scores.size(), 1u);
    EXPECT_NE(sweep_summary_csv(r).find("n_candidates"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    const std::string out = (dir / "run").string();
    const std::string small = "--override traces.n_buildings=1 --override traces.n_weeks=1";
    EXPECT_EQ(run_cli("run " + small + " --override mode=rbc --out " + out), 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "metrics.csv"));
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("run --override schedule.bogus=1"), 2);
    EXPECT_EQ(run_cli("run --nonsense"), 2);
    EXPECT_EQ(run_cli("run " + small + " --override traces.source=csv --override traces.csv_path=/nonexistent.csv --out " + out), 3);
    EXPECT_EQ(run_cli("gen-data --buildings 2 --weeks 1 --out " + (dir / "t.csv").string()), 0);
    EXPECT_EQ(load_traces_csv(dir / "t.csv").size(), 2u);
    {
        std::ofstream(dir / "bad.json") << R"({"seed": 1, "extra": true})";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);
    fs::remove_all(dir);
}
