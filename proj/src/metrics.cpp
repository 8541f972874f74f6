#include "solpol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace solpol {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

void require_nonempty(std::span<const double> e, const char* what) {
    if (e.empty()) throw std::invalid_argument(std::string(what) + " needs a non-empty series");
}

}  // namespace

double ramping(std::span<const double> e) {
    if (e.size() < 2) throw std::invalid_argument("ramping needs at least two hours");
    double s = 0.0;
    for (std::size_t t = 1; t < e.size(); ++t) s += std::abs(e[t] - e[t - 1]);
    return s;
}

double one_minus_load_factor(std::span<const double> e, std::size_t window) {
    require_nonempty(e, "load factor");
    if (window == 0) throw std::invalid_argument("load factor window must be positive");
    double acc = 0.0;
    std::size_t n_windows = 0;
    for (std::size_t start = 0; start < e.size(); start += window) {
        const std::size_t end = std::min(e.size(), start + window);
        double sum = 0.0, peak = 0.0;
        for (std::size_t t = start; t < end; ++t) {
            sum += pos(e[t]);
            peak = std::max(peak, pos(e[t]));
        }
        if (peak > 0.0) acc += 1.0 - (sum / static_cast<double>(end - start)) / peak;
        ++n_windows;
    }
    return acc / static_cast<double>(n_windows);
}

double avg_daily_peak(std::span<const double> e) {
    require_nonempty(e, "daily peak");
    double acc = 0.0;
    std::size_t days = 0;
    for (std::size_t start = 0; start < e.size(); start += kHoursPerDay) {
        const std::size_t end = std::min(e.size(), start + static_cast<std::size_t>(kHoursPerDay));
        double peak = 0.0;
        for (std::size_t t = start; t < end; ++t) peak = std::max(peak, pos(e[t]));
        acc += peak;
        ++days;
    }
    return acc / static_cast<double>(days);
}

double peak_demand(std::span<const double> e) {
    double peak = 0.0;
    for (double x : e) peak = std::max(peak, pos(x));
    return peak;
}

double total_consumption(std::span<const double> e) {
    double s = 0.0;
    for (double x : e) s += pos(x);
    return s;
}

double carbon(std::span<const double> e, std::span<const double> intensity) {
    if (e.size() != intensity.size()) throw std::invalid_argument("carbon intensity length mismatch");
    double s = 0.0;
    for (std::size_t t = 0; t < e.size(); ++t) s += pos(e[t]) * intensity[t];
    return s;
}

std::array<double, MetricValues::kCount> MetricValues::as_array() const {
    return {ramping, one_minus_load_factor, avg_daily_peak, peak_demand, total_consumption, carbon};
}

MetricValues MetricValues::from_array(const std::array<double, kCount>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

MetricValues compute_metrics(std::span<const double> e, std::span<const double> intensity) {
    return {ramping(e),         one_minus_load_factor(e), avg_daily_peak(e),
            peak_demand(e),     total_consumption(e),     carbon(e, intensity)};
}

MetricReport score_ratios(const MetricValues& agent, const MetricValues& baseline) {
    const auto a = agent.as_array();
    const auto b = baseline.as_array();
    std::array<double, MetricValues::kCount> r{};
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (b[i] == 0.0) {
            if (a[i] != 0.0)
                throw std::domain_error(fmt::format("baseline {} is zero but the agent's is {}", kMetricNames[i], a[i]));
            r[i] = 1.0;
        } else {
            r[i] = a[i] / b[i];
        }
    }
    MetricReport rep;
    rep.raw = agent;
    rep.ratio = MetricValues::from_array(r);
    rep.total_score = std::accumulate(r.begin(), r.end(), 0.0) / 6.0;
    rep.coordination_score = (r[0] + r[1] + r[2] + r[3]) / 4.0;
    return rep;
}

GuidanceSignal peak_guidance(std::span<const double> e, std::size_t m, double v) {
    const std::size_t n = e.size();
    if (m == 0 || m >= n) throw std::invalid_argument("guidance needs 0 < m < number of hours");
    if (!std::isfinite(v)) throw std::invalid_argument("guidance value must be finite");
    for (double x : e)
        if (std::isnan(x)) throw std::invalid_argument("consumption series contains NaN");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] > e[b]; });

    GuidanceSignal rho = GuidanceSignal::Zero(static_cast<Eigen::Index>(n));
    if (v == 0.0) return rho;
    // Both levels are integer multiples of `unit` below 2^53 units, so any summation order is exact.
    const double md = static_cast<double>(m);
    const double rest = static_cast<double>(n - m);
    const int exponent = static_cast<int>(std::ceil(std::log2(md * std::abs(v))));
    const double unit = std::ldexp(1.0, exponent - 52);
    const double q = std::nearbyint(v / (rest * unit));
    const double high = rest * q * unit;
    const double low = -md * q * unit;
    rho.setConstant(low);
    for (std::size_t i = 0; i < m; ++i) rho[static_cast<Eigen::Index>(order[i])] = high;
    return rho;
}

GuidanceSignal peak_guidance(const EpisodeTrace& trace, std::size_t building, std::size_t m, double v) {
    const std::vector<double> e = trace.building_net(building);
    return peak_guidance(e, m, v);
}

std::string metrics_csv_header() {
    std::string h;
    for (const char* name : kMetricNames) h += fmt::format("{},", name);
    for (const char* name : kMetricNames) h += fmt::format("{}_ratio,", name);
    return h + "coordination_score,total_score";
}

std::string metrics_csv_row(const MetricReport& report) {
    std::string row;
    for (double x : report.raw.as_array()) row += fmt::format("{},", x);
    for (double x : report.ratio.as_array()) row += fmt::format("{},", x);
    return row + fmt::format("{},{}", report.coordination_score, report.total_score);
}

void print_metric_table(const MetricReport& report, std::ostream& out) {
    const auto raw = report.raw.as_array();
    const auto ratio = report.ratio.as_array();
    out << fmt::format("{:<24}{:>16}{:>10}\n", "metric", "value", "ratio");
    for (std::size_t i = 0; i < raw.size(); ++i)
        out << fmt::format("{:<24}{:>16.4f}{:>10.4f}\n", kMetricNames[i], raw[i], ratio[i]);
    out << fmt::format("{:<24}{:>26.4f}\n", "coordination_score", report.coordination_score);
    out << fmt::format("{:<24}{:>26.4f}\n", "total_score", report.total_score);
}

}  // namespace solpol
