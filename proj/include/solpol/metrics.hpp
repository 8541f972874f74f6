#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>

#include "solpol/microgrid.hpp"
#include "solpol/param_space.hpp"

namespace solpol {

inline constexpr std::size_t kMonthHours = 730;

/// Sum of |e_t - e_{t-1}|.
double ramping(std::span<const double> e);
/// Mean over consecutive windows (the trailing partial one included) of 1 - mean(e+)/max(e+);
/// a window whose max is zero contributes 0.
double one_minus_load_factor(std::span<const double> e, std::size_t window = kMonthHours);
/// Mean over days (trailing partial day included) of the daily max of e+.
double avg_daily_peak(std::span<const double> e);
double peak_demand(std::span<const double> e);
double total_consumption(std::span<const double> e);
double carbon(std::span<const double> e, std::span<const double> intensity);

struct MetricValues {
    double ramping = 0.0;
    double one_minus_load_factor = 0.0;
    double avg_daily_peak = 0.0;
    double peak_demand = 0.0;
    double total_consumption = 0.0;
    double carbon = 0.0;

    static constexpr std::size_t kCount = 6;
    std::array<double, kCount> as_array() const;
    static MetricValues from_array(const std::array<double, kCount>& a);

    friend bool operator==(const MetricValues&, const MetricValues&) = default;
};

inline constexpr std::array<const char*, MetricValues::kCount> kMetricNames{
    "ramping", "one_minus_load_factor", "avg_daily_peak", "peak_demand", "total_consumption", "carbon"};

MetricValues compute_metrics(std::span<const double> e, std::span<const double> intensity);

struct MetricReport {
    MetricValues raw;
    MetricValues ratio;
    double total_score = 0.0;         // mean of the six ratios
    double coordination_score = 0.0;  // mean of the first four ratios
};

/// Element-wise agent / baseline. A metric that is zero for both gives ratio 1;
/// a zero baseline with a nonzero agent value throws std::domain_error.
MetricReport score_ratios(const MetricValues& agent, const MetricValues& baseline);

/// Published total score of the reference controller on its benchmark climate zone.
/// Kept for documentation; synthetic scenarios are not comparable to it.
inline constexpr double kReferenceTotalScore = 0.962;

/// Zero-mean hourly signal: +v on the m hours with the largest consumption (earlier hour wins
/// ties), -m v / (24 - m) elsewhere. Values are rounded to a dyadic grid so the sum is exactly 0.
GuidanceSignal peak_guidance(std::span<const double> e, std::size_t m = 2, double v = 0.02);
GuidanceSignal peak_guidance(const EpisodeTrace& trace, std::size_t building, std::size_t m = 2, double v = 0.02);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricReport& report);
void print_metric_table(const MetricReport& report, std::ostream& out);

}  // namespace solpol
