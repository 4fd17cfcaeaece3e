#pragma once

#include <vector>

#include "motionrank/rankpool.hpp"

namespace motionrank {

// Invert the pooling identity for the final frame of a T-frame window:
//   I_T = (D - sum_{i=1..T-1} alpha_i I_i) / alpha_T.
// Output is intentionally unclamped; it feeds a loss. Requires T >= 2
// (alpha_1 = 0 makes T = 1 degenerate) and exactly T-1 leading frames.
Tensor recover_last_frame(const DynamicImage& d, const std::vector<Frame>& leading_frames, int T);

// Clip to [0,1] for display/export.
Frame clamp_to_frame(const Tensor& x);

} // namespace motionrank
