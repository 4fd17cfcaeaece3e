#include "motionrank/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "motionrank/errors.hpp"

namespace motionrank {

AdamState make_adam_state(const TensorMap& params) {
    AdamState s;
    for (const auto& [name, p] : params) {
        s.m.emplace(name, Tensor(p.shape));
        s.v.emplace(name, Tensor(p.shape));
    }
    return s;
}

void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, const AdamConfig& cfg) {
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));

    for (auto& [name, p] : params) {
        const auto git = grads.find(name);
        if (git == grads.end()) {
            throw std::invalid_argument("adam_step: missing gradient for parameter '" + name + "'");
        }
        const Tensor& g = git->second;
        require_same_shape(p, g, "adam_step");

        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        require_same_shape(p, m, "adam_step: state m");
        require_same_shape(p, v, "adam_step: state v");

        for (std::size_t i = 0; i < p.data.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            p.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

} // namespace motionrank
