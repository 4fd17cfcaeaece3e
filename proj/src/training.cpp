#include "motionrank/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "motionrank/adam.hpp"
#include "motionrank/errors.hpp"
#include "motionrank/layers.hpp"
#include "motionrank/recovery.hpp"
#include "motionrank/rng.hpp"

namespace motionrank {

std::pair<double, Tensor> dynamic_loss(const DynamicImage& d_hat, const DynamicImage& d_true) {
    require_same_shape(d_hat, d_true, "dynamic_loss");
    const double inv_n = 1.0 / static_cast<double>(d_hat.numel());
    double loss = 0.0;
    Tensor grad(d_hat.shape);
    for (std::size_t i = 0; i < d_hat.data.size(); ++i) {
        const double diff = d_hat.data[i] - d_true.data[i];
        loss += diff * diff;
        grad.data[i] = 2.0 * diff * inv_n;
    }
    return {loss * inv_n, std::move(grad)};
}

std::pair<double, Tensor> static_loss(const DynamicImage& d_hat,
                                      const std::vector<Frame>& leading_future,
                                      const Frame& final_future, int T) {
    const Tensor recovered = recover_last_frame(d_hat, leading_future, T);
    require_same_shape(recovered, final_future, "static_loss");
    const double inv_alpha = 1.0 / coefficients(T).alpha.back();
    const double inv_n = 1.0 / static_cast<double>(recovered.numel());

    double loss = 0.0;
    Tensor grad(d_hat.shape);
    for (std::size_t i = 0; i < recovered.data.size(); ++i) {
        const double diff = recovered.data[i] - final_future.data[i];
        loss += diff * diff;
        // d(recovered)/d(d_hat) is 1/alpha_T elementwise.
        grad.data[i] = 2.0 * diff * inv_n * inv_alpha;
    }
    return {loss * inv_n, std::move(grad)};
}

std::pair<double, Tensor> classification_loss(const DynamicImage& d_hat, int label,
                                              const ModelParams& teacher) {
    if (teacher.kind != ModelParams::Kind::Classifier) {
        throw std::invalid_argument("classification_loss: teacher is not a classifier");
    }
    const Tensor standardized = standardize_dynamic_image(d_hat);
    LayerTape tape;
    const Tensor logits = classifier_logits_cached(teacher, standardized, tape);
    auto [loss, logit_grad] = softmax_cross_entropy(logits, label);
    BackpropResult back = classifier_backward(teacher, tape, logit_grad);
    Tensor grad = standardize_backward(d_hat, back.input_grad);
    return {loss, std::move(grad)};
}

std::vector<std::vector<std::size_t>> split_batch(std::size_t batch_size, const LossSet& enabled,
                                                  std::uint64_t seed) {
    const int parts = enabled.count();
    if (parts == 0) {
        throw std::invalid_argument("split_batch: no losses enabled");
    }
    if (batch_size < static_cast<std::size_t>(parts)) {
        throw std::invalid_argument("split_batch: batch of " + std::to_string(batch_size) +
                                    " cannot feed " + std::to_string(parts) + " losses");
    }
    std::vector<std::size_t> order(batch_size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> out;
    const std::size_t base = batch_size / static_cast<std::size_t>(parts);
    const std::size_t extra = batch_size % static_cast<std::size_t>(parts);
    std::size_t pos = 0;
    for (int p = 0; p < parts; ++p) {
        const std::size_t len = base + (static_cast<std::size_t>(p) < extra ? 1 : 0);
        out.emplace_back(order.begin() + pos, order.begin() + pos + len);
        pos += len;
    }
    return out;
}

namespace {

void accumulate_scaled(TensorMap& total, const TensorMap& grads, double scale) {
    for (const auto& [name, g] : grads) {
        auto it = total.find(name);
        if (it == total.end()) {
            Tensor t = g;
            t *= scale;
            total.emplace(name, std::move(t));
        } else {
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                it->second.data[i] += scale * g.data[i];
            }
        }
    }
}

enum class LossId { Dl, Sl, Cl };

std::vector<LossId> enabled_losses(const LossSet& s) {
    std::vector<LossId> v;
    if (s.dl) v.push_back(LossId::Dl);
    if (s.sl) v.push_back(LossId::Sl);
    if (s.cl) v.push_back(LossId::Cl);
    return v;
}

} // namespace

GeneratorTrainResult train_generator(const std::vector<GenSample>& dataset,
                                     const GeneratorConfig& gen_config,
                                     const ModelParams* teacher, const TrainConfig& config) {
    if (dataset.empty()) {
        throw std::invalid_argument("train_generator: empty dataset");
    }
    if (config.losses.none()) {
        throw std::invalid_argument("train_generator: no losses enabled");
    }
    if (config.losses.cl && teacher == nullptr) {
        throw std::invalid_argument("train_generator: classification loss needs a teacher");
    }
    const auto losses = enabled_losses(config.losses);
    const int n_losses = static_cast<int>(losses.size());
    if (config.batch_size < n_losses) {
        throw std::invalid_argument("train_generator: batch_size must be >= number of enabled losses");
    }

    GeneratorTrainResult result;
    result.generator = init_generator(gen_config, config.seed);
    AdamState adam = make_adam_state(result.generator.tensors);
    const AdamConfig adam_cfg{config.lr, config.beta1, config.beta2, config.eps};

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng(derive_seed(config.seed, 0x5eedULL));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        epoch_rng.shuffle(order);

        double sum_dl = 0.0, sum_sl = 0.0, sum_cl = 0.0;
        std::size_t n_dl = 0, n_sl = 0, n_cl = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_len =
                std::min<std::size_t>(config.batch_size, order.size() - batch_start);
            // A trailing remainder too small to feed every loss is skipped.
            if (batch_len < static_cast<std::size_t>(n_losses)) {
                continue;
            }
            const auto sub_batches = split_batch(
                batch_len, config.losses,
                derive_seed(config.seed, (static_cast<std::uint64_t>(epoch) << 20) + batch_start));

            TensorMap total_grads;
            for (std::size_t li = 0; li < losses.size(); ++li) {
                const auto& sub = sub_batches[li];
                const double inv_sub = 1.0 / static_cast<double>(sub.size());

                // Per-sample gradients are independent; accumulate afterwards
                // in index order so results do not depend on thread count.
                std::vector<TensorMap> sample_grads(sub.size());
                std::vector<double> sample_losses(sub.size());
#pragma omp parallel for schedule(dynamic) if (sub.size() > 1)
                for (std::size_t si = 0; si < sub.size(); ++si) {
                    const GenSample& sample = dataset[order[batch_start + sub[si]]];
                    LayerTape tape;
                    const DynamicImage d_hat =
                        generator_forward_cached(result.generator, sample.d_current, tape);

                    std::pair<double, Tensor> lg;
                    switch (losses[li]) {
                        case LossId::Dl:
                            lg = dynamic_loss(d_hat, sample.d_next);
                            break;
                        case LossId::Sl:
                            lg = static_loss(d_hat, sample.leading_future, sample.final_future,
                                             static_cast<int>(sample.leading_future.size()) + 1);
                            break;
                        case LossId::Cl:
                            lg = classification_loss(d_hat, sample.label, *teacher);
                            break;
                    }
                    sample_losses[si] = lg.first;
                    sample_grads[si] =
                        generator_backward(result.generator, tape, lg.second).param_grads;
                }

                for (std::size_t si = 0; si < sub.size(); ++si) {
                    accumulate_scaled(total_grads, sample_grads[si], inv_sub);
                    switch (losses[li]) {
                        case LossId::Dl: sum_dl += sample_losses[si]; ++n_dl; break;
                        case LossId::Sl: sum_sl += sample_losses[si]; ++n_sl; break;
                        case LossId::Cl: sum_cl += sample_losses[si]; ++n_cl; break;
                    }
                }
            }
            adam_step(result.generator.tensors, total_grads, adam, adam_cfg);
        }

        EpochLoss el;
        el.epoch = epoch;
        if (config.losses.dl) el.dl = n_dl ? sum_dl / static_cast<double>(n_dl) : 0.0;
        if (config.losses.sl) el.sl = n_sl ? sum_sl / static_cast<double>(n_sl) : 0.0;
        if (config.losses.cl) el.cl = n_cl ? sum_cl / static_cast<double>(n_cl) : 0.0;
        result.log.push_back(el);
    }
    return result;
}

std::vector<std::pair<Tensor, int>> teacher_items(const std::vector<FrameSequence>& videos,
                                                  TeacherKind kind, int T, int stride) {
    std::vector<std::pair<Tensor, int>> items;
    for (const FrameSequence& v : videos) {
        if (kind == TeacherKind::Static) {
            for (const Frame& f : v.frames) {
                items.emplace_back(f, v.label);
            }
        } else {
            for (DynamicImage& d : dynamic_image_sequence(v, T, stride)) {
                items.emplace_back(standardize_dynamic_image(d), v.label);
            }
        }
    }
    return items;
}

double classifier_accuracy(const ModelParams& params,
                           const std::vector<std::pair<Tensor, int>>& items) {
    if (items.empty()) {
        throw std::invalid_argument("classifier_accuracy: no items");
    }
    std::vector<int> hits(items.size(), 0);
#pragma omp parallel for schedule(dynamic) if (items.size() > 1)
    for (std::size_t i = 0; i < items.size(); ++i) {
        const ScoreVector probs = classifier_forward(params, items[i].first);
        const auto arg = static_cast<int>(
            std::max_element(probs.data.begin(), probs.data.end()) - probs.data.begin());
        hits[i] = (arg == items[i].second) ? 1 : 0;
    }
    return std::accumulate(hits.begin(), hits.end(), 0) / static_cast<double>(items.size());
}

TeacherTrainResult train_teacher(const std::vector<FrameSequence>& train_videos,
                                 const std::vector<FrameSequence>& heldout_videos,
                                 TeacherKind kind, const ClassifierConfig& cls_config,
                                 const TrainConfig& config, int T, int stride) {
    const auto train_items = teacher_items(train_videos, kind, T, stride);
    const auto heldout_items = teacher_items(heldout_videos, kind, T, stride);
    if (train_items.empty()) {
        throw std::invalid_argument("train_teacher: no training items");
    }
    {
        std::vector<bool> seen(static_cast<std::size_t>(cls_config.num_classes), false);
        int distinct = 0;
        for (const auto& [img, label] : train_items) {
            if (label < 0 || label >= cls_config.num_classes) {
                throw std::invalid_argument("train_teacher: label " + std::to_string(label) +
                                            " out of range");
            }
            if (!seen[static_cast<std::size_t>(label)]) {
                seen[static_cast<std::size_t>(label)] = true;
                ++distinct;
            }
        }
        if (distinct < 2) {
            throw std::invalid_argument("train_teacher: need at least 2 classes in the data");
        }
    }

    TeacherTrainResult result;
    result.teacher = init_classifier(cls_config, config.seed);
    AdamState adam = make_adam_state(result.teacher.tensors);
    const AdamConfig adam_cfg{config.lr, config.beta1, config.beta2, config.eps};

    std::vector<std::size_t> order(train_items.size());
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng(derive_seed(config.seed, 0x7eacULL));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        epoch_rng.shuffle(order);
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_len =
                std::min<std::size_t>(config.batch_size, order.size() - batch_start);
            const double inv = 1.0 / static_cast<double>(batch_len);

            std::vector<TensorMap> sample_grads(batch_len);
#pragma omp parallel for schedule(dynamic) if (batch_len > 1)
            for (std::size_t si = 0; si < batch_len; ++si) {
                const auto& [image, label] = train_items[order[batch_start + si]];
                LayerTape tape;
                const Tensor logits = classifier_logits_cached(result.teacher, image, tape);
                auto [loss, logit_grad] = softmax_cross_entropy(logits, label);
                (void)loss;
                sample_grads[si] = classifier_backward(result.teacher, tape, logit_grad).param_grads;
            }

            TensorMap total;
            for (const auto& g : sample_grads) {
                accumulate_scaled(total, g, inv);
            }
            adam_step(result.teacher.tensors, total, adam, adam_cfg);
        }

        const double acc = heldout_items.empty()
                               ? classifier_accuracy(result.teacher, train_items)
                               : classifier_accuracy(result.teacher, heldout_items);
        result.accuracy_log.emplace_back(epoch, acc);
    }
    return result;
}

FrameSequence augment(const FrameSequence& seq, const AugmentOps& ops) {
    validate_sequence(seq, "augment");
    const int h = seq.frames.front().shape[1];
    const int w = seq.frames.front().shape[2];
    if (std::abs(ops.dx) >= w || std::abs(ops.dy) >= h) {
        throw std::invalid_argument("augment: shift (" + std::to_string(ops.dx) + "," +
                                    std::to_string(ops.dy) + ") exceeds frame " +
                                    std::to_string(w) + "x" + std::to_string(h));
    }
    FrameSequence out;
    out.label = seq.label;
    out.frames.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) {
        Frame g(f.shape);
        const int c_n = f.shape[0];
        for (int c = 0; c < c_n; ++c) {
            for (int y = 0; y < h; ++y) {
                const int sy = y - ops.dy;
                if (sy < 0 || sy >= h) continue;
                for (int x = 0; x < w; ++x) {
                    const int sx0 = x - ops.dx;
                    if (sx0 < 0 || sx0 >= w) continue;
                    const int sx = ops.hflip ? (w - 1 - sx0) : sx0;
                    g.at(c, y, x) = f.at(c, sy, sx);
                }
            }
        }
        out.frames.push_back(std::move(g));
    }
    return out;
}

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void write_generator_log_csv(const std::vector<EpochLoss>& log, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << "epoch,loss_dl,loss_sl,loss_cl,teacher_acc\n";
    for (const EpochLoss& e : log) {
        out << e.epoch << ',' << (e.dl ? fmt6(*e.dl) : "") << ',' << (e.sl ? fmt6(*e.sl) : "")
            << ',' << (e.cl ? fmt6(*e.cl) : "") << ",\n";
    }
}

void write_teacher_log_csv(const std::vector<std::pair<int, double>>& log, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << "epoch,loss_dl,loss_sl,loss_cl,teacher_acc\n";
    for (const auto& [epoch, acc] : log) {
        out << epoch << ",,,," << fmt6(acc) << "\n";
    }
}

} // namespace motionrank
