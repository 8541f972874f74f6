#include "solpol/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace solpol {

namespace {

ParamVector scalar(double v) { return ParamVector::Constant(1, v); }

}  // namespace

TestFunction quadratic_function() {
    return {"quadratic", BoxDomain(scalar(0.0), scalar(1.0)), scalar(0.7), [](const ParamVector& z) {
                const double d = z[0] - 0.7;
                return -d * d;
            }};
}

TestFunction two_peak_function() {
    return {"two_peak", BoxDomain(scalar(0.0), scalar(1.0)), scalar(0.8), [](const ParamVector& z) {
                const double a = z[0] - 0.8, b = z[0] - 0.2;
                return std::exp(-200.0 * a * a) + 0.6 * std::exp(-200.0 * b * b);
            }};
}

TestFunction rastrigin_function() {
    const ParamVector lo = ParamVector::Zero(2), hi = ParamVector::Ones(2);
    return {"rastrigin", BoxDomain(lo, hi), ParamVector::Constant(2, 0.3), [](const ParamVector& z) {
                double s = 0.0;
                for (Eigen::Index i = 0; i < z.size(); ++i) {
                    const double d = z[i] - 0.3;
                    s += 4.0 * d * d + 0.1 * (1.0 - std::cos(2.0 * std::numbers::pi * 5.0 * d));
                }
                return -s;
            }};
}

EsSchedule growing_schedule(int iterations, double iota1, double exponent, double alpha) {
    EsSchedule s = EsSchedule::power_decay(3, iota1, exponent, alpha, iterations);
    s.n_candidates = [iterations](int k) { return static_cast<std::size_t>(std::min(3 + k, std::max(iterations, 1))); };
    return s;
}

BlackboxResult run_blackbox(const BlackboxSpec& spec, std::uint64_t seed, double radius, double accuracy) {
    const TestFunction& tf = spec.function;
    const EsSchedule schedule = growing_schedule(spec.iterations, spec.iota1, spec.iota_exponent, spec.alpha);
    Rng rng(seed);
    Rng noise_rng(seed ^ 0x9e3779b97f4a7c15ULL);

    struct Probe {
        ParamVector z;
    };
    const auto evaluator = [&](const ParamVector& z) {
        double r = tf.f(z);
        if (spec.noise > 0.0) r += spec.noise * (2.0 * uniform01(noise_rng) - 1.0);
        return Evaluation<Probe>{r, Probe{z}};
    };
    const auto guidance = [&](const Probe& p) -> GuidanceSignal {
        if (spec.oracle_guidance_gain == 0.0) return GuidanceSignal::Zero(tf.box.dim());
        return spec.oracle_guidance_gain * (tf.argmax - p.z);
    };

    BlackboxResult out;
    out.function = tf.name;
    out.seed = seed;
    out.noise = spec.noise;
    out.alpha = spec.alpha;

    const ParamVector z0 = tf.box.center();
    EsState state = init_state(z0, tf.box, schedule, rng);
    for (int k = 1; k <= schedule.max_iterations; ++k) {
        state = run_iteration(std::move(state), evaluator, guidance, tf.box, schedule, rng);
        if (out.iterations_to_accuracy < 0 && (state.best - tf.argmax).cwiseAbs().maxCoeff() <= accuracy)
            out.iterations_to_accuracy = k;
    }
    const auto& last = state.batch.candidates;
    std::size_t near = 0;
    for (const auto& c : last) near += (c - tf.argmax).cwiseAbs().maxCoeff() <= radius ? 1 : 0;
    out.concentration = last.empty() ? 0.0 : static_cast<double>(near) / static_cast<double>(last.size());
    out.best = state.best.size() ? state.best : z0;
    out.best_error = (out.best - tf.argmax).cwiseAbs().maxCoeff();
    out.es.best = out.best;
    out.es.best_reward = state.best_reward;
    out.es.history = state.history;
    out.es.final_state = std::move(state);
    return out;
}

}  // namespace solpol
