#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionrank/rankpool.hpp"
#include "motionrank/rng.hpp"
#include "motionrank/training.hpp"

namespace motionrank {

// Six motion-defined classes over a shared appearance: a bright shape that
// translates, grows or shrinks. The static look carries almost no class
// signal; the motion carries all of it.
enum class MotionClass : int { Left = 0, Right, Up, Down, Grow, Shrink };

constexpr int kNumMotionClasses = 6;
const char* motion_class_name(int class_id);

enum class ShapeKind { Square, Disc };

struct SynthConfig {
    int frames_per_video = 40;
    int channels = 1;
    int height = 32;
    int width = 32;
    ShapeKind shape = ShapeKind::Square;
    double speed_min = 0.15;  // px per frame
    double speed_max = 0.5;
    double size_min = 3.0;    // shape half-extent, px
    double size_max = 5.0;
    double brightness = 0.9;
    double noise = 0.18;      // additive Gaussian amplitude
    std::uint64_t seed = 1;
};

// Start pose and speed of one video; drawn class-independently so a single
// frame stays uninformative about the label.
struct MotionState {
    double cx0 = 0.0;
    double cy0 = 0.0;
    double half0 = 0.0;
    double speed = 0.0;
};

MotionState draw_motion_state(const SynthConfig& config, Rng& rng);

// Renders the trajectory for one class; the speed is clamped so the shape
// never leaves the frame. Noise is drawn from rng (amplitude 0 draws nothing).
FrameSequence render_synth_video(int class_id, const SynthConfig& config, const MotionState& state,
                                 Rng& rng);

// Deterministic in (class_id, config, instance_seed).
FrameSequence synth_video(int class_id, const SynthConfig& config, std::uint64_t instance_seed);

struct LabeledDataset {
    std::vector<FrameSequence> train;
    std::vector<FrameSequence> val;
    std::vector<FrameSequence> test;
};

// Balanced, seeded, disjoint splits with every class in every split.
LabeledDataset make_dataset(const SynthConfig& config, int n_per_class,
                            const std::vector<double>& split_ratios);

// Consecutive full-window pairs at the given stride from each video; videos
// too short for a pair are counted, not fatal.
struct GenSampleBuild {
    std::vector<GenSample> samples;
    int skipped_videos = 0;
};
GenSampleBuild build_gen_samples(const std::vector<FrameSequence>& videos, int T, int stride);

// Reads frame_000001.png-style files with contiguous indices from 1.
FrameSequence load_frames(const std::string& directory);

enum class ExportMode { Raw, Png };

// Raw writes the DIMG format; png min-max normalizes for viewing, mapping a
// zero-range image to uniform 128.
void export_dynamic_image(const DynamicImage& d, const std::string& path, ExportMode mode);

// On-disk layout: <dir>/video_0000/frame_000001.png ... plus manifest.json
// listing paths, labels and split membership.
void persist_dataset(const LabeledDataset& dataset, const SynthConfig& config,
                     const std::string& directory);
LabeledDataset load_dataset(const std::string& directory);

} // namespace motionrank
