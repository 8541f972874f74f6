#include "solpol/guided_es.hpp"

#include <cmath>
#include <numeric>

#include "detail/kernel.hpp"

namespace solpol {

EsSchedule EsSchedule::power_decay(std::size_t n, double iota1, double exponent, double alpha, int max_iterations) {
    if (n < 1) throw std::invalid_argument("candidate count must be >= 1");
    if (!(iota1 > 0.0)) throw std::invalid_argument("initial iota must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
    if (max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
    EsSchedule s;
    s.n_candidates = [n](int) { return n; };
    s.iota = [iota1, exponent](int k) { return iota1 / std::pow(static_cast<double>(k), exponent); };
    s.alpha = [alpha](int) { return alpha; };
    s.max_iterations = max_iterations;
    return s;
}

EsSchedule EsSchedule::standard(int max_iterations) { return power_decay(3, 0.4, 2.0, 1.0, max_iterations); }

KernelParams EsSchedule::kernel_at(int k) const {
    KernelParams kp{alpha(k), iota(k), KernelKind::Noisy};
    if (!(kp.iota > 0.0)) throw std::invalid_argument("schedule produced non-positive iota");
    if (!(kp.alpha >= 0.0)) throw std::invalid_argument("schedule produced negative alpha");
    return kp;
}

std::size_t EsSchedule::candidates_at(int k) const {
    const std::size_t n = n_candidates(k);
    if (n < 1) throw std::invalid_argument("schedule produced zero candidates");
    return n;
}

EsState init_state(const ParamVector& z0, const BoxDomain& box, const EsSchedule& schedule, Rng& rng) {
    if (!box.contains(z0)) throw std::invalid_argument("initial point lies outside the box");
    EsState state;
    state.best = z0;
    const KernelParams kp = schedule.kernel_at(1);
    const GuidanceSignal zero = GuidanceSignal::Zero(box.dim());
    const std::size_t n = schedule.candidates_at(1);
    state.pending.reserve(n);
    for (std::size_t j = 0; j < n; ++j) state.pending.push_back(sample_kernel(z0, zero, kp, box, rng));
    return state;
}

EsState complete_iteration(EsState state, std::vector<double> rewards, std::vector<GuidanceSignal> guidance,
                           const BoxDomain& box, const EsSchedule& schedule, Rng& rng) {
    const std::size_t n = state.pending.size();
    if (rewards.size() != n || guidance.size() != n)
        throw std::invalid_argument("rewards and guidance must match the pending generation");
    for (const auto& g : guidance) {
        if (g.size() != box.dim() || !g.allFinite()) throw std::invalid_argument("guidance must be finite with box dimension");
    }

    CandidateBatch batch;
    batch.candidates = std::move(state.pending);
    batch.weights = softmax_weights(rewards);
    batch.rewards = std::move(rewards);
    batch.guidance = std::move(guidance);

    IterationSummary summary;
    summary.iteration = state.iteration;
    summary.mean_reward = std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / static_cast<double>(n);
    summary.generation_best = batch.rewards.front();
    for (std::size_t j = 0; j < n; ++j) {
        summary.generation_best = std::max(summary.generation_best, batch.rewards[j]);
        if (batch.rewards[j] > state.best_reward) {  // strict: ties keep the earlier candidate
            state.best_reward = batch.rewards[j];
            state.best = batch.candidates[j];
        }
    }
    summary.best_so_far = state.best_reward;
    summary.weights = batch.weights;
    state.history.push_back(std::move(summary));

    const int next = state.iteration + 1;
    const KernelParams kp = schedule.kernel_at(next);
    const std::size_t next_n = schedule.candidates_at(next);
    state.pending.clear();
    state.pending.reserve(next_n);
    for (std::size_t j = 0; j < next_n; ++j) state.pending.push_back(sample_mixture(batch, kp, box, rng));
    state.batch = std::move(batch);
    state.iteration = next;
    return state;
}

ParamVector elitist_transition(const ParamVector& z, const GuidanceSignal& rho, const KernelParams& kp,
                               const std::function<double(const ParamVector&)>& objective, const BoxDomain& box,
                               Rng& rng) {
    if (kp.kind != KernelKind::ElitistNoiseless)
        throw std::invalid_argument("elitist_transition requires the elitist noiseless kernel");
    ParamVector draw = detail::draw_triangular(z, rho, kp.alpha, kp.iota, box, rng);
    const double f_draw = objective(draw);
    const double f_z = objective(z);
    if (!std::isfinite(f_draw) || !std::isfinite(f_z)) throw std::invalid_argument("non-finite objective value");
    return f_draw >= f_z ? draw : z;
}

}  // namespace solpol
