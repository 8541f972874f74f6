#include "solpol/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "detail/kernel.hpp"

namespace solpol {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

BoxDomain::BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() < 1) throw std::invalid_argument("box must have at least one dimension");
    if (lo_.size() != hi_.size()) throw std::invalid_argument("box bound lengths differ");
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
        if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || !(lo_[i] < hi_[i]))
            throw std::invalid_argument("box requires finite lo < hi at coordinate " + std::to_string(i));
    }
}

BoxDomain BoxDomain::uniform(Eigen::Index dim, double lo, double hi) {
    return BoxDomain(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi));
}

bool BoxDomain::contains(const ParamVector& v) const {
    if (v.size() != dim()) return false;
    return ((v.array() >= lo_.array()) && (v.array() <= hi_.array())).all();
}

void CandidateBatch::validate() const {
    const auto n = candidates.size();
    if (rewards.size() != n || guidance.size() != n || weights.size() != n)
        throw std::invalid_argument("candidate batch sequences have different lengths");
    if (n == 0) throw std::invalid_argument("candidate batch is empty");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("candidate weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("candidate weights must sum to 1");
}

ParamVector clamp(const ParamVector& v, const BoxDomain& box) {
    if (v.size() != box.dim()) throw std::invalid_argument("parameter dimension does not match box");
    if (!v.allFinite()) throw std::invalid_argument("non-finite parameter");
    return v.cwiseMax(box.lo()).cwiseMin(box.hi());
}

std::vector<double> softmax_weights(std::span<const double> rewards) {
    if (rewards.empty()) throw std::invalid_argument("softmax of an empty reward vector");
    double top = -std::numeric_limits<double>::infinity();
    for (double r : rewards) {
        if (!std::isfinite(r)) throw std::invalid_argument("non-finite reward");
        top = std::max(top, r);
    }
    std::vector<double> w(rewards.size());
    double total = 0.0;
    for (std::size_t j = 0; j < rewards.size(); ++j) {
        // floored at the smallest normal so weights stay strictly positive under underflow
        w[j] = std::max(std::exp(rewards[j] - top), std::numeric_limits<double>::min());
        total += w[j];
    }
    for (double& x : w) x /= total;
    return w;
}

namespace detail {

ParamVector draw_triangular(const ParamVector& z, const GuidanceSignal& rho, double alpha, double iota,
                            const BoxDomain& box, Rng& rng) {
    if (!(iota > 0.0) || !std::isfinite(iota)) throw std::invalid_argument("kernel scale iota must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("guidance rate alpha must be nonnegative");
    if (z.size() != box.dim() || rho.size() != box.dim())
        throw std::invalid_argument("kernel center, guidance and box dimensions differ");
    ParamVector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double u = uniform01(rng) + uniform01(rng) - 1.0;  // triangular on (-1, 1)
        out[i] = z[i] + alpha * rho[i] + 3.0 * iota * u;
    }
    return clamp(out, box);
}

}  // namespace detail

ParamVector sample_kernel(const ParamVector& z, const GuidanceSignal& rho, const KernelParams& kp,
                          const BoxDomain& box, Rng& rng) {
    if (kp.kind != KernelKind::Noisy) throw std::invalid_argument("sample_kernel requires the noisy kernel");
    return detail::draw_triangular(z, rho, kp.alpha, kp.iota, box, rng);
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    if (weights.empty()) throw std::invalid_argument("cannot sample from empty weights");
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] > 0.0) last_positive = j;
        acc += weights[j];
        if (u < acc) return j;
    }
    return last_positive;  // u landed in the rounding gap above the final partial sum
}

ParamVector sample_mixture(const CandidateBatch& batch, const KernelParams& kp, const BoxDomain& box, Rng& rng) {
    batch.validate();
    const std::size_t j = sample_index(batch.weights, rng);
    return sample_kernel(batch.candidates[j], batch.guidance[j], kp, box, rng);
}

}  // namespace solpol
