#include "motionrank/recovery.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "motionrank/errors.hpp"

namespace motionrank {

Tensor recover_last_frame(const DynamicImage& d, const std::vector<Frame>& leading_frames, int T) {
    if (T < 2) {
        throw DegenerateWindowError("recover_last_frame: window length " + std::to_string(T) +
                                    " is degenerate (alpha_1 = 0)");
    }
    if (static_cast<int>(leading_frames.size()) != T - 1) {
        throw std::invalid_argument("recover_last_frame: expected " + std::to_string(T - 1) +
                                    " leading frames, got " + std::to_string(leading_frames.size()));
    }
    const CoefficientVector cv = coefficients(T);
    Tensor out = d;
    for (int i = 0; i < T - 1; ++i) {
        const Frame& f = leading_frames[static_cast<std::size_t>(i)];
        require_same_shape(d, f, "recover_last_frame");
        const double a = cv.alpha[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < out.data.size(); ++k) {
            out.data[k] -= a * f.data[k];
        }
    }
    const double a_last = cv.alpha.back();
    out *= 1.0 / a_last;
    return out;
}

Frame clamp_to_frame(const Tensor& x) {
    Frame f = x;
    for (double& v : f.data) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return f;
}

} // namespace motionrank
