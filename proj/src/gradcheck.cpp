#include "motionrank/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motionrank/errors.hpp"
#include "motionrank/rng.hpp"

namespace motionrank {

double gradcheck(const LossWithGrad& fn, const TensorMap& params, const GradcheckOptions& opts,
                 const std::function<double(const TensorMap&)>& loss_only) {
    if (!(opts.eps > 0.0)) {
        throw std::invalid_argument("gradcheck: eps must be positive");
    }
    const auto eval_loss = [&](const TensorMap& p) {
        return loss_only ? loss_only(p) : fn(p).first;
    };

    auto [loss0, analytic] = fn(params);
    if (!std::isfinite(loss0)) {
        throw NumericError("gradcheck: loss is non-finite at the base point");
    }

    Rng rng(opts.seed);
    TensorMap probe = params;
    double max_rel = 0.0;

    for (const auto& [name, p] : params) {
        const auto ait = analytic.find(name);
        if (ait == analytic.end()) {
            throw std::invalid_argument("gradcheck: analytic gradients missing '" + name + "'");
        }
        require_same_shape(p, ait->second, "gradcheck: analytic grad");

        const std::size_t n = p.numel();
        std::vector<std::size_t> coords;
        if (static_cast<int>(n) <= opts.max_coords_per_tensor) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords.reserve(static_cast<std::size_t>(opts.max_coords_per_tensor));
            for (int i = 0; i < opts.max_coords_per_tensor; ++i) {
                coords.push_back(static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
            }
        }

        Tensor& pt = probe.at(name);
        for (std::size_t idx : coords) {
            const double saved = pt.data[idx];
            const double a = ait->second.data[idx];
            const auto rel_at = [&](double eps) {
                pt.data[idx] = saved + eps;
                const double lp = eval_loss(probe);
                pt.data[idx] = saved - eps;
                const double lm = eval_loss(probe);
                pt.data[idx] = saved;
                if (!std::isfinite(lp) || !std::isfinite(lm)) {
                    throw NumericError("gradcheck: loss is non-finite near '" + name + "'");
                }
                const double numeric = (lp - lm) / (2.0 * eps);
                return std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            };
            double rel = rel_at(opts.eps);
            if (opts.refine_target > 0.0 && rel > opts.refine_target) {
                for (double eps = opts.eps / 4.0; eps >= opts.eps / 4096.0 * 0.999; eps /= 4.0) {
                    rel = std::min(rel, rel_at(eps));
                    if (rel <= opts.refine_target) break;
                }
            }
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace motionrank
