#pragma once

#include <cstdint>

#include "motionrank/tensor.hpp"

namespace motionrank {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 0.1;
};

// First/second moment accumulators, keyed like the parameters they track.
struct AdamState {
    TensorMap m;
    TensorMap v;
    std::int64_t step_count = 0;
};

// Lazily sizes moments on first use; shapes must match params thereafter.
AdamState make_adam_state(const TensorMap& params);

// In-place Adam update with bias correction; eps is added to sqrt(v_hat).
// Deterministic: identical inputs produce bit-identical params and state.
void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, const AdamConfig& cfg);

} // namespace motionrank
