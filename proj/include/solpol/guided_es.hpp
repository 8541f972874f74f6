#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "solpol/param_space.hpp"

namespace solpol {

/// Per-iteration schedule of the guided evolutionary search. Iterations are 1-based.
struct EsSchedule {
    std::function<std::size_t(int)> n_candidates;
    std::function<double(int)> iota;
    std::function<double(int)> alpha;
    int max_iterations = 0;

    /// N_k constant, iota_k = iota1 / k^exponent, alpha_k constant.
    static EsSchedule power_decay(std::size_t n, double iota1, double exponent, double alpha, int max_iterations);
    /// N_k = 3, iota_k = 0.4 / k^2, alpha_k = 1.
    static EsSchedule standard(int max_iterations);

    KernelParams kernel_at(int k) const;
    std::size_t candidates_at(int k) const;
};

struct IterationSummary {
    int iteration = 0;
    double mean_reward = 0.0;
    double generation_best = 0.0;
    double best_so_far = 0.0;
    std::vector<double> weights;
};

struct EsState {
    int iteration = 1;
    /// Candidates of the current generation awaiting evaluation.
    std::vector<ParamVector> pending;
    /// Most recently evaluated generation with its rewards, guidance and weights.
    CandidateBatch batch;
    ParamVector best;
    double best_reward = -std::numeric_limits<double>::infinity();
    std::vector<IterationSummary> history;
};

template <class Trajectory>
struct Evaluation {
    double reward = 0.0;
    Trajectory trajectory{};
};

/// Raised when an evaluator throws; carries the index of the failing candidate.
class CandidateEvaluationError : public std::runtime_error {
public:
    CandidateEvaluationError(std::size_t index, const std::string& what)
        : std::runtime_error("candidate " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Draws the first generation from the kernel around z0 (zero guidance, scale iota_1).
EsState init_state(const ParamVector& z0, const BoxDomain& box, const EsSchedule& schedule, Rng& rng);

/// Consumes the rewards and guidance of the pending generation (in candidate order), updates the
/// best-so-far and history, and draws the next generation from the reward-weighted mixture.
EsState complete_iteration(EsState state, std::vector<double> rewards, std::vector<GuidanceSignal> guidance,
                           const BoxDomain& box, const EsSchedule& schedule, Rng& rng);

/// One iteration: every pending candidate is evaluated `episodes` times (rewards and guidance averaged).
template <class Evaluator, class GuidanceFn>
EsState run_iteration(EsState state, Evaluator&& evaluator, GuidanceFn&& guidance_fn, const BoxDomain& box,
                      const EsSchedule& schedule, Rng& rng, int episodes = 1) {
    if (episodes < 1) throw std::invalid_argument("episodes per candidate must be >= 1");
    std::vector<double> rewards;
    std::vector<GuidanceSignal> guidance;
    rewards.reserve(state.pending.size());
    guidance.reserve(state.pending.size());
    for (std::size_t j = 0; j < state.pending.size(); ++j) {
        double reward = 0.0;
        GuidanceSignal rho = GuidanceSignal::Zero(box.dim());
        try {
            for (int e = 0; e < episodes; ++e) {
                auto outcome = evaluator(state.pending[j]);
                reward += outcome.reward;
                rho += guidance_fn(outcome.trajectory);
            }
        } catch (const CandidateEvaluationError&) {
            throw;
        } catch (const std::exception& ex) {
            throw CandidateEvaluationError(j, ex.what());
        }
        rewards.push_back(reward / episodes);
        guidance.push_back(rho / episodes);
    }
    return complete_iteration(std::move(state), std::move(rewards), std::move(guidance), box, schedule, rng);
}

struct EsResult {
    ParamVector best;
    double best_reward = -std::numeric_limits<double>::infinity();
    std::vector<IterationSummary> history;
    EsState final_state;
};

template <class Evaluator, class GuidanceFn>
EsResult run(const ParamVector& z0, const BoxDomain& box, const EsSchedule& schedule, Evaluator&& evaluator,
             GuidanceFn&& guidance_fn, Rng& rng, int episodes = 1) {
    EsState state = init_state(z0, box, schedule, rng);
    for (int k = 1; k <= schedule.max_iterations; ++k)
        state = run_iteration(std::move(state), evaluator, guidance_fn, box, schedule, rng, episodes);
    EsResult out;
    out.best = state.best;
    out.best_reward = state.best_reward;
    out.history = state.history;
    out.final_state = std::move(state);
    return out;
}

/// Noiseless elitist transition: draw from the triangular kernel and keep the draw only if it
/// is at least as good as z.
ParamVector elitist_transition(const ParamVector& z, const GuidanceSignal& rho, const KernelParams& kp,
                               const std::function<double(const ParamVector&)>& objective,
                               const BoxDomain& box, Rng& rng);

}  // namespace solpol
