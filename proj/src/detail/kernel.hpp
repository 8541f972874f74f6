#pragma once

#include "solpol/param_space.hpp"

namespace solpol::detail {

/// Triangular kernel draw shared by the noisy and elitist transitions.
ParamVector draw_triangular(const ParamVector& z, const GuidanceSignal& rho, double alpha, double iota,
                            const BoxDomain& box, Rng& rng);

}  // namespace solpol::detail
