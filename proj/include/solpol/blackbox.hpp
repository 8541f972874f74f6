#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "solpol/guided_es.hpp"
#include "solpol/param_space.hpp"

namespace solpol {

/// Deterministic test objective on a box with a known global maximizer.
struct TestFunction {
    std::string name;
    BoxDomain box;
    ParamVector argmax;
    std::function<double(const ParamVector&)> f;
};

/// -(z - 0.7)^2 on [0, 1].
TestFunction quadratic_function();
/// exp(-200 (z - 0.8)^2) + 0.6 exp(-200 (z - 0.2)^2) on [0, 1]; global peak near 0.8.
TestFunction two_peak_function();
/// Separable multimodal surface on [0, 1]^2 with its global maximum at (0.3, 0.3).
TestFunction rastrigin_function();

struct BlackboxSpec {
    TestFunction function;
    int iterations = 0;
    /// Rewards get an additive U[-noise, noise] perturbation.
    double noise = 0.0;
    double alpha = 0.0;
    /// Optional oracle guidance pointing at the maximizer: gain * (argmax - z). Zero disables it.
    double oracle_guidance_gain = 0.0;
    double iota1 = 0.4;
    double iota_exponent = 2.0;
};

/// N_k = min(3 + k, iterations), iota_k = iota1 / k^exponent, constant alpha.
EsSchedule growing_schedule(int iterations, double iota1, double exponent, double alpha);

struct BlackboxResult {
    std::string function;
    std::uint64_t seed = 0;
    double noise = 0.0;
    double alpha = 0.0;
    ParamVector best;
    double best_error = 0.0;         // max-norm distance of the best-so-far to the maximizer
    double concentration = 0.0;      // fraction of the last generation within `radius` of the maximizer
    int iterations_to_accuracy = -1; // first iteration whose best-so-far is within `accuracy`, -1 if never
    EsResult es;
};

BlackboxResult run_blackbox(const BlackboxSpec& spec, std::uint64_t seed, double radius = 0.1, double accuracy = 0.05);

}  // namespace solpol
