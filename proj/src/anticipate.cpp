#include "motionrank/anticipate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "motionrank/errors.hpp"

namespace motionrank {

std::vector<DynamicImage> generate_future(const std::function<DynamicImage(const DynamicImage&)>& step,
                                          const DynamicImage& d_last, int k) {
    if (k < 0) {
        throw std::invalid_argument("generate_future: k must be >= 0");
    }
    if (k > 0 && !step) {
        throw std::invalid_argument("generate_future: k > 0 requires a generator");
    }
    std::vector<DynamicImage> out;
    out.reserve(static_cast<std::size_t>(k));
    const DynamicImage* prev = &d_last;
    for (int i = 0; i < k; ++i) {
        out.push_back(step(*prev));
        prev = &out.back();
    }
    return out;
}

std::vector<DynamicImage> generate_future(const ModelParams& generator,
                                          const DynamicImage& d_last, int k) {
    return generate_future(
        [&generator](const DynamicImage& d) { return generator_forward(generator, d); }, d_last, k);
}

AnticipatePipeline make_pipeline(const AnticipateModels& models) {
    if (models.static_model == nullptr || models.dynamic_model == nullptr) {
        throw std::invalid_argument("make_pipeline: static and dynamic models are required");
    }
    AnticipatePipeline p;
    const ModelParams* static_model = models.static_model;
    const ModelParams* dynamic_model = models.dynamic_model;
    p.score_frame = [static_model](const Frame& f) { return classifier_forward(*static_model, f); };
    p.score_dynamic_image = [dynamic_model](const DynamicImage& d) {
        return classifier_forward(*dynamic_model, standardize_dynamic_image(d));
    };
    if (models.generator != nullptr) {
        const ModelParams* generator = models.generator;
        p.generator_step = [generator](const DynamicImage& d) {
            return generator_forward(*generator, d);
        };
    }
    return p;
}

namespace {

// Temporal mean of a stream's score vectors; empty tensor for empty streams.
ScoreVector stream_mean(const std::vector<ScoreVector>& scores) {
    if (scores.empty()) {
        return {};
    }
    ScoreVector m = scores.front();
    for (std::size_t i = 1; i < scores.size(); ++i) {
        require_same_shape(m, scores[i], "fuse_scores: stream entry");
        m += scores[i];
    }
    m *= 1.0 / static_cast<double>(scores.size());
    return m;
}

int argmax_lowest(const ScoreVector& v) {
    return static_cast<int>(std::max_element(v.data.begin(), v.data.end()) - v.data.begin());
}

} // namespace

std::pair<ScoreVector, int> fuse_scores(const std::vector<ScoreVector>& static_scores,
                                        const std::vector<ScoreVector>& dynamic_scores,
                                        const std::vector<ScoreVector>& generated_scores) {
    const ScoreVector means[3] = {stream_mean(static_scores), stream_mean(dynamic_scores),
                                  stream_mean(generated_scores)};
    ScoreVector fused;
    for (const ScoreVector& m : means) {
        if (m.numel() == 0) continue;
        if (fused.numel() == 0) {
            fused = m;
        } else {
            require_same_shape(fused, m, "fuse_scores: stream mean");
            fused += m;
        }
    }
    if (fused.numel() == 0) {
        throw std::invalid_argument("fuse_scores: all streams empty");
    }
    const double z = sum(fused);
    if (z > 0.0) {
        fused *= 1.0 / z;
    }
    return {fused, argmax_lowest(fused)};
}

AnticipationResult anticipate(const FrameSequence& video_prefix, const AnticipatePipeline& pipeline,
                              int T, int stride, int k) {
    validate_sequence(video_prefix, "anticipate");
    if (!pipeline.score_frame || !pipeline.score_dynamic_image) {
        throw std::invalid_argument("anticipate: frame and dynamic-image scorers are required");
    }
    if (k > 0 && !pipeline.generator_step) {
        throw std::invalid_argument("anticipate: k > 0 requires a generator");
    }

    if (pipeline.frame_step < 1) {
        throw std::invalid_argument("anticipate: frame_step must be >= 1");
    }
    std::vector<ScoreVector> static_scores;
    static_scores.reserve(video_prefix.size());
    for (std::size_t i = 0; i < video_prefix.size(); i += static_cast<std::size_t>(pipeline.frame_step)) {
        static_scores.push_back(pipeline.score_frame(video_prefix.frames[i]));
    }

    const std::vector<DynamicImage> observed = dynamic_image_sequence(video_prefix, T, stride);
    std::vector<ScoreVector> dynamic_scores;
    dynamic_scores.reserve(observed.size());
    for (const DynamicImage& d : observed) {
        dynamic_scores.push_back(pipeline.score_dynamic_image(d));
    }

    std::vector<ScoreVector> generated_scores;
    if (k > 0) {
        const auto future = generate_future(pipeline.generator_step, observed.back(), k);
        generated_scores.reserve(future.size());
        for (const DynamicImage& d : future) {
            generated_scores.push_back(pipeline.score_dynamic_image(d));
        }
    }

    AnticipationResult result;
    auto [fused, predicted] = fuse_scores(static_scores, dynamic_scores, generated_scores);
    result.fused = std::move(fused);
    result.predicted_class = predicted;
    result.static_mean = stream_mean(static_scores);
    result.dynamic_mean = stream_mean(dynamic_scores);
    result.generated_mean = stream_mean(generated_scores);
    result.k_used = k;
    return result;
}

AnticipationResult anticipate(const FrameSequence& video_prefix, const AnticipateModels& models,
                              int T, int stride, int k) {
    return anticipate(video_prefix, make_pipeline(models), T, stride, k);
}

namespace {

FrameSequence truncate_video(const FrameSequence& video, double fraction) {
    const auto n = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(video.size())));
    FrameSequence prefix;
    prefix.label = video.label;
    prefix.frames.assign(video.frames.begin(),
                         video.frames.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(n, 1)));
    return prefix;
}

double accuracy_at_fraction(const std::vector<FrameSequence>& dataset,
                            const AnticipatePipeline& pipeline, int T, int stride, int k,
                            double fraction) {
    std::vector<int> hits(dataset.size(), 0);
    // Per-video results land in their own slot; merge order is fixed.
#pragma omp parallel for schedule(dynamic) if (dataset.size() > 1)
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const FrameSequence prefix = truncate_video(dataset[i], fraction);
        AnticipationResult r = anticipate(prefix, pipeline, T, stride, k);
        r.fraction_observed = fraction;
        hits[i] = (r.predicted_class == dataset[i].label) ? 1 : 0;
    }
    int correct = 0;
    for (int h : hits) correct += h;
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

} // namespace

AnticipationCurve evaluate_curve(const std::vector<FrameSequence>& dataset,
                                 const AnticipatePipeline& pipeline, int T, int stride, int k,
                                 const std::vector<double>& fractions) {
    if (dataset.empty()) {
        throw std::invalid_argument("evaluate_curve: empty dataset");
    }
    if (fractions.empty()) {
        throw std::invalid_argument("evaluate_curve: no fractions given");
    }
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) {
            throw std::invalid_argument("evaluate_curve: fractions must lie in (0,1]");
        }
        if (i > 0 && fractions[i] <= fractions[i - 1]) {
            throw std::invalid_argument("evaluate_curve: fractions must be strictly increasing");
        }
    }
    AnticipationCurve curve;
    for (double p : fractions) {
        curve.points.emplace_back(p, accuracy_at_fraction(dataset, pipeline, T, stride, k, p));
    }
    return curve;
}

AnticipationCurve evaluate_curve(const std::vector<FrameSequence>& dataset,
                                 const AnticipateModels& models, int T, int stride, int k,
                                 const std::vector<double>& fractions) {
    return evaluate_curve(dataset, make_pipeline(models), T, stride, k, fractions);
}

std::pair<double, double> earliest_latest(const std::vector<FrameSequence>& dataset,
                                          const AnticipatePipeline& pipeline, int T, int stride,
                                          int k, double earliest_fraction) {
    if (!(earliest_fraction > 0.0 && earliest_fraction < 1.0)) {
        throw std::invalid_argument("earliest_latest: earliest fraction must lie in (0,1)");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("earliest_latest: empty dataset");
    }
    const double earliest = accuracy_at_fraction(dataset, pipeline, T, stride, k, earliest_fraction);
    const double latest = accuracy_at_fraction(dataset, pipeline, T, stride, k, 1.0);
    return {earliest, latest};
}

std::vector<std::pair<int, double>> k_sweep(const std::vector<FrameSequence>& dataset,
                                            const AnticipatePipeline& pipeline, int T, int stride,
                                            int k_max, double fraction) {
    if (k_max < 0) {
        throw std::invalid_argument("k_sweep: k_max must be >= 0");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("k_sweep: empty dataset");
    }
    std::vector<std::pair<int, double>> sweep;
    sweep.reserve(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
        sweep.emplace_back(k, accuracy_at_fraction(dataset, pipeline, T, stride, k, fraction));
    }
    return sweep;
}

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void write_curve_csv(const AnticipationCurve& curve, int k, std::uint64_t seed,
                     const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << "fraction,accuracy,k,seed\n";
    for (const auto& [fraction, accuracy] : curve.points) {
        out << fmt6(fraction) << ',' << fmt6(accuracy) << ',' << k << ',' << seed << "\n";
    }
}

void write_sweep_csv(const std::vector<std::pair<int, double>>& sweep, double fraction,
                     std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << "k,accuracy,fraction,seed\n";
    for (const auto& [k, accuracy] : sweep) {
        out << k << ',' << fmt6(accuracy) << ',' << fmt6(fraction) << ',' << seed << "\n";
    }
}

} // namespace motionrank
