#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace solpol {

using Rng = std::mt19937_64;

/// Learnable parameters of the planner (one entry per tunable quantity).
using ParamVector = Eigen::VectorXd;

/// Trajectory-derived shift applied to a kernel center, same length as the parameters.
using GuidanceSignal = Eigen::VectorXd;

/// Uniform draw on [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);

/// Axis-aligned box lo <= x <= hi with lo[i] < hi[i].
class BoxDomain {
public:
    BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi);

    /// Same bounds on every coordinate.
    static BoxDomain uniform(Eigen::Index dim, double lo, double hi);

    Eigen::Index dim() const { return lo_.size(); }
    const Eigen::VectorXd& lo() const { return lo_; }
    const Eigen::VectorXd& hi() const { return hi_; }
    Eigen::VectorXd center() const { return 0.5 * (lo_ + hi_); }
    bool contains(const ParamVector& v) const;

private:
    Eigen::VectorXd lo_;
    Eigen::VectorXd hi_;
};

enum class KernelKind { Noisy, ElitistNoiseless };

struct KernelParams {
    double alpha = 1.0;  // guidance rate
    double iota = 0.4;   // kernel scale
    KernelKind kind = KernelKind::Noisy;
};

/// One generation of the search: candidates with their rewards, guidance and mixture weights.
struct CandidateBatch {
    std::vector<ParamVector> candidates;
    std::vector<double> rewards;
    std::vector<GuidanceSignal> guidance;
    std::vector<double> weights;

    std::size_t size() const { return candidates.size(); }
    /// Throws std::invalid_argument if lengths differ or weights are not a probability vector.
    void validate() const;
};

/// Component-wise projection onto the box. Throws on non-finite input.
ParamVector clamp(const ParamVector& v, const BoxDomain& box);

/// Max-shifted softmax; exact under adding a constant to every reward.
std::vector<double> softmax_weights(std::span<const double> rewards);

/// Per-coordinate symmetric triangular density on [-3 iota, 3 iota] around z + alpha * rho,
/// projected into the box.
ParamVector sample_kernel(const ParamVector& z, const GuidanceSignal& rho,
                          const KernelParams& kp, const BoxDomain& box, Rng& rng);

/// Index drawn from a discrete distribution by CDF inversion.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

/// Superposition sampling from the reward-weighted mixture of kernels.
ParamVector sample_mixture(const CandidateBatch& batch, const KernelParams& kp,
                           const BoxDomain& box, Rng& rng);

}  // namespace solpol
