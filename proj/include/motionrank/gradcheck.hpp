#pragma once

#include <cstdint>
#include <functional>

#include "motionrank/tensor.hpp"

namespace motionrank {

// Loss with analytic parameter gradients, both evaluated at the same point.
using LossWithGrad = std::function<std::pair<double, TensorMap>(const TensorMap&)>;

struct GradcheckOptions {
    double eps = 1e-3;
    // Coordinates probed per tensor; larger tensors are subsampled.
    int max_coords_per_tensor = 24;
    std::uint64_t seed = 7;
    // When > 0, a coordinate whose relative error exceeds this is re-probed
    // at steps shrinking from eps/4 to eps/4096 and the best agreement is
    // kept. A finite-difference step that straddles an activation kink says
    // nothing about the gradient; shrinking the step separates kink
    // artifacts (which vanish) from real gradient bugs (which persist at
    // every step size).
    double refine_target = 0.0;
};

// Central finite differences against the analytic gradient. Returns the max
// over probed coordinates of |a - n| / max(|a|, |n|, 1e-8). Throws
// NumericError if the loss is non-finite anywhere it is evaluated. When
// loss_only is given, probe points skip the gradient computation.
double gradcheck(const LossWithGrad& fn, const TensorMap& params, const GradcheckOptions& opts = {},
                 const std::function<double(const TensorMap&)>& loss_only = nullptr);

} // namespace motionrank
