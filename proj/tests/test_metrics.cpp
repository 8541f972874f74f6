#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "solpol/metrics.hpp"

using namespace solpol;

namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo = -5.0, double hi = 20.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> e(n);
    for (double& x : e) x = u(rng);
    return e;
}

}  // namespace

TEST(Ramping, Examples) {
    EXPECT_EQ(ramping(std::vector<double>(10, 4.2)), 0.0);
    EXPECT_DOUBLE_EQ(ramping(std::vector<double>{1, 3, 2}), 3.0);
    EXPECT_THROW(ramping(std::vector<double>{1}), std::invalid_argument);
}

TEST(Ramping, Homogeneous) {
    std::mt19937_64 rng(1);
    const auto e = random_series(rng, 100);
    for (double c : {2.0, -0.5, 3.25}) {
        std::vector<double> s(e);
        for (double& x : s) x *= c;
        EXPECT_NEAR(ramping(s), std::abs(c) * ramping(e), 1e-9);
    }
}

TEST(LoadFactor, Examples) {
    EXPECT_EQ(one_minus_load_factor(std::vector<double>(100, 3.0)), 0.0);
    EXPECT_NEAR(one_minus_load_factor(std::vector<double>{1, 1, 2}), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(one_minus_load_factor(std::vector<double>(50, 0.0)), 0.0);
    EXPECT_EQ(one_minus_load_factor(std::vector<double>(50, -2.0)), 0.0);
}

TEST(LoadFactor, WindowsAverageWithPartialTail) {
    // window 3: [1,1,2] -> 1/3, [0,0,0] -> 0, [4] -> 0
    const std::vector<double> e{1, 1, 2, 0, 0, 0, 4};
    EXPECT_NEAR(one_minus_load_factor(e, 3), (1.0 / 3.0) / 3.0, 1e-15);
    std::vector<double> month(730, 2.0);
    month[5] = 4.0;
    EXPECT_NEAR(one_minus_load_factor(month), 1.0 - (2.0 * 729 + 4.0) / 730.0 / 4.0, 1e-12);
}

TEST(DailyPeak, Examples) {
    std::vector<double> e(48, 0.0);
    e[17] = 5.0;
    e[24 + 17] = 5.0;
    EXPECT_DOUBLE_EQ(avg_daily_peak(e), 5.0);
    EXPECT_DOUBLE_EQ(peak_demand(e), 5.0);
    std::vector<double> partial(30, 1.0);
    partial[27] = 7.0;
    EXPECT_DOUBLE_EQ(avg_daily_peak(partial), 4.0);
}

TEST(Metrics, AllNegativeIsZero) {
    const std::vector<double> e(72, -3.0);
    const std::vector<double> ci(72, 0.5);
    EXPECT_EQ(one_minus_load_factor(e), 0.0);
    EXPECT_EQ(avg_daily_peak(e), 0.0);
    EXPECT_EQ(peak_demand(e), 0.0);
    EXPECT_EQ(total_consumption(e), 0.0);
    EXPECT_EQ(carbon(e, ci), 0.0);
}

TEST(Metrics, UnitIntensityCarbonEqualsConsumption) {
    std::mt19937_64 rng(2);
    const auto e = random_series(rng, 200);
    EXPECT_EQ(carbon(e, std::vector<double>(200, 1.0)), total_consumption(e));
    EXPECT_THROW(carbon(e, std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST(Metrics, NonNegativeAndStableUnderZeroPadding) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        auto e = random_series(rng, 24 * 5);
        e.back() = 0.0;
        const std::vector<double> ci(e.size(), 0.4);
        const auto m = compute_metrics(e, ci);
        for (double x : m.as_array()) EXPECT_GE(x, 0.0);
        auto padded = e;
        padded.resize(e.size() + 24, 0.0);
        const std::vector<double> ci2(padded.size(), 0.4);
        const auto p = compute_metrics(padded, ci2);
        EXPECT_EQ(p.ramping, m.ramping);
        EXPECT_EQ(p.peak_demand, m.peak_demand);
        EXPECT_EQ(p.total_consumption, m.total_consumption);
        EXPECT_EQ(p.carbon, m.carbon);
    }
}

TEST(ScoreRatios, SelfIsAllOnes) {
    std::mt19937_64 rng(4);
    const auto e = random_series(rng, 240);
    const auto m = compute_metrics(e, std::vector<double>(240, 0.3));
    const auto r = score_ratios(m, m);
    for (double x : r.ratio.as_array()) EXPECT_EQ(x, 1.0);
    EXPECT_EQ(r.total_score, 1.0);
    EXPECT_EQ(r.coordination_score, 1.0);
}

TEST(ScoreRatios, HalvedRamping) {
    const MetricValues base{10, 0.4, 6, 9, 100, 30};
    MetricValues agent = base;
    agent.ramping = 5;
    const auto r = score_ratios(agent, base);
    EXPECT_DOUBLE_EQ(r.ratio.ramping, 0.5);
    EXPECT_DOUBLE_EQ(r.coordination_score, 0.875);
    EXPECT_DOUBLE_EQ(r.total_score, 5.5 / 6.0);
}

TEST(ScoreRatios, ZeroBaseline) {
    const MetricValues zero{0, 0, 0, 0, 0, 0};
    EXPECT_EQ(score_ratios(zero, zero).total_score, 1.0);
    MetricValues agent = zero;
    agent.peak_demand = 1.0;
    EXPECT_THROW(score_ratios(agent, zero), std::domain_error);
}

TEST(ScoreRatios, ReferenceConstant) { EXPECT_EQ(kReferenceTotalScore, 0.962); }

TEST(Guidance, PeakHoursExample) {
    std::vector<double> e(24, 1.0);
    e[16] = 9.0;  // hour 17
    e[17] = 8.0;  // hour 18
    const auto rho = peak_guidance(e);
    for (int t = 0; t < 24; ++t) {
        if (t == 16 || t == 17) EXPECT_NEAR(rho[t], 0.02, 1e-15);
        else EXPECT_NEAR(rho[t], -0.04 / 22.0, 1e-15);
    }
    EXPECT_EQ(rho.sum(), 0.0);
}

TEST(Guidance, TiesGoToEarlierHours) {
    const auto rho = peak_guidance(std::vector<double>(24, 3.0));
    EXPECT_GT(rho[0], 0.0);
    EXPECT_GT(rho[1], 0.0);
    for (int t = 2; t < 24; ++t) EXPECT_LT(rho[t], 0.0);
}

TEST(Guidance, SumIsExactlyZeroAndScaleFree) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(0.01, 100.0);
    std::uniform_int_distribution<std::size_t> mm(1, 6);
    for (int i = 0; i < 1000; ++i) {
        const auto e = random_series(rng, 24);
        const std::size_t m = mm(rng);
        const double v = i % 2 ? 0.02 : 0.04;
        const auto rho = peak_guidance(e, m, v);
        EXPECT_EQ(rho.sum(), 0.0);
        double back = 0.0;
        for (int t = 23; t >= 0; --t) back += rho[t];
        EXPECT_EQ(back, 0.0);
        std::vector<double> scaled(e);
        const double k = c(rng);
        for (double& x : scaled) x *= k;
        EXPECT_EQ(peak_guidance(scaled, m, v), rho);
    }
}

TEST(Guidance, InvalidArguments) {
    EXPECT_THROW(peak_guidance(std::vector<double>(24, 1.0), 0), std::invalid_argument);
    EXPECT_THROW(peak_guidance(std::vector<double>(24, 1.0), 24), std::invalid_argument);
    std::vector<double> e(24, 1.0);
    e[3] = NAN;
    EXPECT_THROW(peak_guidance(e), std::invalid_argument);
}

TEST(Output, CsvColumnOrder) {
    const MetricValues v{1, 2, 3, 4, 5, 6};
    const auto r = score_ratios(v, v);
    EXPECT_EQ(metrics_csv_header(),
              "ramping,one_minus_load_factor,avg_daily_peak,peak_demand,total_consumption,carbon,ramping_ratio,"
              "one_minus_load_factor_ratio,avg_daily_peak_ratio,peak_demand_ratio,total_consumption_ratio,carbon_ratio,"
              "coordination_score,total_score");
    EXPECT_EQ(metrics_csv_row(r), "1,2,3,4,5,6,1,1,1,1,1,1,1,1");
    std::ostringstream os;
    print_metric_table(r, os);
    EXPECT_NE(os.str().find("total_score"), std::string::npos);
}
