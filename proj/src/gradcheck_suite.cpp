#include "motionrank/gradcheck_suite.hpp"

#include <cmath>

#include "motionrank/gradcheck.hpp"
#include "motionrank/kernels.hpp"
#include "motionrank/layers.hpp"
#include "motionrank/models.hpp"
#include "motionrank/recovery.hpp"
#include "motionrank/rng.hpp"
#include "motionrank/training.hpp"

namespace motionrank {

namespace {

Tensor rand_uniform(Rng& rng, const std::vector<int>& shape, double lo, double hi) {
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Magnitudes bounded away from zero keep finite differences off activation kinks.
Tensor rand_away_from_zero(Rng& rng, const std::vector<int>& shape, double min_abs, double max_abs) {
    Tensor t(shape);
    for (double& v : t.data) {
        const double mag = rng.uniform(min_abs, max_abs);
        v = rng.uniform01() < 0.5 ? -mag : mag;
    }
    return t;
}

SuiteItem check(const std::string& name, double threshold, const LossWithGrad& fn,
                const TensorMap& params, const GradcheckOptions& opts,
                const std::function<double(const TensorMap&)>& loss_only = nullptr) {
    SuiteItem item;
    item.name = name;
    item.threshold = threshold;
    item.max_rel_err = gradcheck(fn, params, opts, loss_only);
    item.pass = item.max_rel_err < threshold;
    return item;
}

} // namespace

std::vector<SuiteItem> run_gradcheck_suite() {
    std::vector<SuiteItem> items;
    Rng rng(20240901);

    GradcheckOptions coarse;  // eps 1e-3 for the checks thresholded at 1e-4
    GradcheckOptions fine;    // tighter eps for the ops with 1e-6 claims
    fine.eps = 1e-4;

    {
        TensorMap params;
        params.emplace("input", rand_uniform(rng, {2, 5, 6}, -1.0, 1.0));
        params.emplace("kernels", rand_uniform(rng, {3, 2, 3, 3}, -0.8, 0.8));
        params.emplace("bias", rand_uniform(rng, {3}, -0.3, 0.3));
        const Tensor w = rand_uniform(rng, {3, 3, 3}, -1.0, 1.0);
        auto fn = [w](const TensorMap& p) {
            const Tensor out = conv2d_forward(p.at("input"), p.at("kernels"), p.at("bias"), 2, 1);
            LayerGrad g = conv2d_backward(p.at("input"), p.at("kernels"), 2, 1, w);
            TensorMap grads;
            grads.emplace("input", std::move(g.input_grad));
            grads.emplace("kernels", std::move(g.param_grads.at("kernels")));
            grads.emplace("bias", std::move(g.param_grads.at("bias")));
            return std::pair<double, TensorMap>{dot(out, w), std::move(grads)};
        };
        items.push_back(check("conv2d", 1e-4, fn, params, coarse));
    }

    {
        TensorMap params;
        params.emplace("input", rand_uniform(rng, {3, 4, 4}, -1.0, 1.0));
        params.emplace("kernels", rand_uniform(rng, {3, 2, 5, 5}, -0.5, 0.5));
        params.emplace("bias", rand_uniform(rng, {2}, -0.3, 0.3));
        const Tensor w = rand_uniform(rng, {2, 8, 8}, -1.0, 1.0);
        auto fn = [w](const TensorMap& p) {
            const Tensor out =
                conv2d_transpose_forward(p.at("input"), p.at("kernels"), p.at("bias"), 2, 2, 1);
            LayerGrad g = conv2d_transpose_backward(p.at("input"), p.at("kernels"), 2, 2, 1, w);
            TensorMap grads;
            grads.emplace("input", std::move(g.input_grad));
            grads.emplace("kernels", std::move(g.param_grads.at("kernels")));
            grads.emplace("bias", std::move(g.param_grads.at("bias")));
            return std::pair<double, TensorMap>{dot(out, w), std::move(grads)};
        };
        items.push_back(check("conv2d_transpose", 1e-4, fn, params, coarse));
    }

    {
        TensorMap params;
        params.emplace("x", rand_uniform(rng, {7}, -1.0, 1.0));
        params.emplace("W", rand_uniform(rng, {4, 7}, -0.8, 0.8));
        params.emplace("b", rand_uniform(rng, {4}, -0.3, 0.3));
        const Tensor w = rand_uniform(rng, {4}, -1.0, 1.0);
        auto fn = [w](const TensorMap& p) {
            const Tensor out = dense_forward(p.at("x"), p.at("W"), p.at("b"));
            LayerGrad g = dense_backward(p.at("x"), p.at("W"), w);
            TensorMap grads;
            grads.emplace("x", std::move(g.input_grad));
            grads.emplace("W", std::move(g.param_grads.at("W")));
            grads.emplace("b", std::move(g.param_grads.at("b")));
            return std::pair<double, TensorMap>{dot(out, w), std::move(grads)};
        };
        items.push_back(check("dense", 1e-6, fn, params, fine));
    }

    const auto activation_item = [&](const std::string& name, Activation kind, double threshold,
                                     const GradcheckOptions& opts) {
        TensorMap params;
        params.emplace("x", kind == Activation::Tanh
                                ? rand_uniform(rng, {1, 4, 5}, -2.0, 2.0)
                                : rand_away_from_zero(rng, {1, 4, 5}, 0.2, 1.5));
        const Tensor w = rand_uniform(rng, {1, 4, 5}, -1.0, 1.0);
        auto fn = [w, kind](const TensorMap& p) {
            const Tensor out = activation_forward(p.at("x"), kind);
            TensorMap grads;
            grads.emplace("x", activation_backward(p.at("x"), kind, w));
            return std::pair<double, TensorMap>{dot(out, w), std::move(grads)};
        };
        items.push_back(check(name, threshold, fn, params, opts));
    };
    activation_item("activation_relu", Activation::Relu, 1e-4, coarse);
    activation_item("activation_leaky_relu", Activation::LeakyRelu, 1e-4, coarse);
    activation_item("activation_tanh", Activation::Tanh, 1e-6, fine);

    {
        TensorMap params;
        params.emplace("logits", rand_uniform(rng, {6}, -2.0, 2.0));
        auto fn = [](const TensorMap& p) {
            auto [loss, grad] = softmax_cross_entropy(p.at("logits"), 2);
            TensorMap grads;
            grads.emplace("logits", std::move(grad));
            return std::pair<double, TensorMap>{loss, std::move(grads)};
        };
        items.push_back(check("softmax_cross_entropy", 1e-6, fn, params, fine));
    }

    {
        TensorMap params;
        params.emplace("d", rand_uniform(rng, {1, 4, 4}, -2.0, 2.0));
        const Tensor w = rand_uniform(rng, {1, 4, 4}, -1.0, 1.0);
        auto fn = [w](const TensorMap& p) {
            const Tensor out = standardize_dynamic_image(p.at("d"));
            TensorMap grads;
            grads.emplace("d", standardize_backward(p.at("d"), w));
            return std::pair<double, TensorMap>{dot(out, w), std::move(grads)};
        };
        items.push_back(check("standardize", 1e-4, fn, params, coarse));
    }

    {
        TensorMap params;
        params.emplace("d_hat", rand_uniform(rng, {1, 4, 4}, -2.0, 2.0));
        const Tensor d_true = rand_uniform(rng, {1, 4, 4}, -2.0, 2.0);
        auto fn = [d_true](const TensorMap& p) {
            auto [loss, grad] = dynamic_loss(p.at("d_hat"), d_true);
            TensorMap grads;
            grads.emplace("d_hat", std::move(grad));
            return std::pair<double, TensorMap>{loss, std::move(grads)};
        };
        items.push_back(check("dynamic_loss", 1e-6, fn, params, fine));
    }

    {
        const int T = 3;
        std::vector<Frame> leading = {rand_uniform(rng, {1, 4, 4}, 0.0, 1.0),
                                      rand_uniform(rng, {1, 4, 4}, 0.0, 1.0)};
        const Frame final_frame = rand_uniform(rng, {1, 4, 4}, 0.0, 1.0);
        TensorMap params;
        params.emplace("d_hat", rand_uniform(rng, {1, 4, 4}, -2.0, 2.0));
        auto fn = [leading, final_frame, T](const TensorMap& p) {
            auto [loss, grad] = static_loss(p.at("d_hat"), leading, final_frame, T);
            TensorMap grads;
            grads.emplace("d_hat", std::move(grad));
            return std::pair<double, TensorMap>{loss, std::move(grads)};
        };
        items.push_back(check("static_loss", 1e-6, fn, params, fine));
    }

    ClassifierConfig teacher_cfg;
    teacher_cfg.in_channels = 1;
    teacher_cfg.height = 8;
    teacher_cfg.width = 8;
    teacher_cfg.stage_feature_maps = {3};
    teacher_cfg.num_classes = 4;
    const ModelParams teacher = init_classifier(teacher_cfg, 99);

    {
        TensorMap params;
        params.emplace("d_hat", rand_uniform(rng, {1, 8, 8}, -2.0, 2.0));
        auto fn = [&teacher](const TensorMap& p) {
            auto [loss, grad] = classification_loss(p.at("d_hat"), 1, teacher);
            TensorMap grads;
            grads.emplace("d_hat", std::move(grad));
            return std::pair<double, TensorMap>{loss, std::move(grads)};
        };
        GradcheckOptions opts = coarse;
        opts.refine_target = 1e-5;
        items.push_back(check("classification_loss", 1e-4, fn, params, opts));
    }

    {
        GeneratorConfig gen_cfg;
        gen_cfg.in_channels = 1;
        gen_cfg.height = 8;
        gen_cfg.width = 8;
        gen_cfg.stage_feature_maps = {2, 3};
        const ModelParams tmpl = init_generator(gen_cfg, 42);

        const int T = 3;
        const DynamicImage d_cur = rand_uniform(rng, {1, 8, 8}, -1.0, 1.0);
        const DynamicImage d_next = rand_uniform(rng, {1, 8, 8}, -1.0, 1.0);
        std::vector<Frame> leading = {rand_uniform(rng, {1, 8, 8}, 0.0, 1.0),
                                      rand_uniform(rng, {1, 8, 8}, 0.0, 1.0)};
        const Frame final_frame = rand_uniform(rng, {1, 8, 8}, 0.0, 1.0);

        auto forward_losses = [&, T](const ModelParams& p, LayerTape& tape, Tensor* upstream) {
            const DynamicImage d_hat = generator_forward_cached(p, d_cur, tape);
            auto [l_dl, g_dl] = dynamic_loss(d_hat, d_next);
            auto [l_sl, g_sl] = static_loss(d_hat, leading, final_frame, T);
            auto [l_cl, g_cl] = classification_loss(d_hat, 1, teacher);
            if (upstream) {
                *upstream = g_dl;
                *upstream += g_sl;
                *upstream += g_cl;
            }
            return l_dl + l_sl + l_cl;
        };
        auto fn = [&](const TensorMap& t) {
            ModelParams p = tmpl;
            p.tensors = t;
            LayerTape tape;
            Tensor upstream;
            const double loss = forward_losses(p, tape, &upstream);
            return std::pair<double, TensorMap>{loss,
                                                generator_backward(p, tape, upstream).param_grads};
        };
        auto loss_only = [&](const TensorMap& t) {
            ModelParams p = tmpl;
            p.tensors = t;
            LayerTape tape;
            return forward_losses(p, tape, nullptr);
        };
        GradcheckOptions opts;
        opts.max_coords_per_tensor = 12;
        opts.refine_target = 1e-5;
        items.push_back(check("generator_stack_dl_sl_cl", 1e-4, fn, tmpl.tensors, opts, loss_only));
    }

    return items;
}

} // namespace motionrank
