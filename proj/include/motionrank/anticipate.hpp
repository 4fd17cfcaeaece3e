#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "motionrank/models.hpp"
#include "motionrank/rankpool.hpp"

namespace motionrank {

struct AnticipationResult {
    int predicted_class = 0;
    ScoreVector fused;
    // Per-stream temporal means; empty tensor when the stream had no entries.
    ScoreVector static_mean;
    ScoreVector dynamic_mean;
    ScoreVector generated_mean;
    int k_used = 0;
    double fraction_observed = 1.0;
};

struct AnticipationCurve {
    std::vector<std::pair<double, double>> points; // (fraction, accuracy)
};

// Scoring and generation hooks; trained models plug in via make_pipeline,
// tests may inject doubles.
struct AnticipatePipeline {
    std::function<ScoreVector(const Frame&)> score_frame;
    std::function<ScoreVector(const DynamicImage&)> score_dynamic_image;
    std::function<DynamicImage(const DynamicImage&)> generator_step; // may be empty when k = 0
    int frame_step = 1; // static stream scores every frame_step-th prefix frame
};

// Recursively applies the generator: D̂_1 = g(d_last), D̂_{i+1} = g(D̂_i).
std::vector<DynamicImage> generate_future(const std::function<DynamicImage(const DynamicImage&)>& step,
                                          const DynamicImage& d_last, int k);
std::vector<DynamicImage> generate_future(const ModelParams& generator,
                                          const DynamicImage& d_last, int k);

// Average each stream over time, sum the available means, renormalize to a
// probability vector; argmax ties break to the lowest class index.
std::pair<ScoreVector, int> fuse_scores(const std::vector<ScoreVector>& static_scores,
                                        const std::vector<ScoreVector>& dynamic_scores,
                                        const std::vector<ScoreVector>& generated_scores);

struct AnticipateModels {
    const ModelParams* static_model = nullptr;
    const ModelParams* dynamic_model = nullptr;
    const ModelParams* generator = nullptr; // only needed when k > 0
};

// Raw frames go to the static classifier; dynamic images get standardized
// before the dynamic classifier sees them.
AnticipatePipeline make_pipeline(const AnticipateModels& models);

// Score every prefix frame with the static scorer, every observed dynamic
// image with the dynamic scorer, generate k future dynamic images from the
// last observed one and score those too, then fuse.
AnticipationResult anticipate(const FrameSequence& video_prefix, const AnticipatePipeline& pipeline,
                              int T, int stride, int k);
AnticipationResult anticipate(const FrameSequence& video_prefix, const AnticipateModels& models,
                              int T, int stride, int k);

// Truncate each video to ceil(p*n) frames per fraction p and measure
// prediction accuracy.
AnticipationCurve evaluate_curve(const std::vector<FrameSequence>& dataset,
                                 const AnticipatePipeline& pipeline, int T, int stride, int k,
                                 const std::vector<double>& fractions);
AnticipationCurve evaluate_curve(const std::vector<FrameSequence>& dataset,
                                 const AnticipateModels& models, int T, int stride, int k,
                                 const std::vector<double>& fractions);

// (accuracy at earliest_fraction, accuracy at 1.0).
std::pair<double, double> earliest_latest(const std::vector<FrameSequence>& dataset,
                                          const AnticipatePipeline& pipeline, int T, int stride,
                                          int k, double earliest_fraction);

// Accuracy at a fixed observed fraction for each k in 0..k_max.
std::vector<std::pair<int, double>> k_sweep(const std::vector<FrameSequence>& dataset,
                                            const AnticipatePipeline& pipeline, int T, int stride,
                                            int k_max, double fraction);

// CSV: fraction,accuracy,k,seed / k,accuracy,fraction,seed; 6-decimal accuracies.
void write_curve_csv(const AnticipationCurve& curve, int k, std::uint64_t seed,
                     const std::string& path);
void write_sweep_csv(const std::vector<std::pair<int, double>>& sweep, double fraction,
                     std::uint64_t seed, const std::string& path);

} // namespace motionrank
