#include "motionrank/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "motionrank/errors.hpp"
#include "motionrank/image_io.hpp"

namespace fs = std::filesystem;

namespace motionrank {

const char* motion_class_name(int class_id) {
    static const char* names[kNumMotionClasses] = {"left", "right", "up", "down", "grow", "shrink"};
    if (class_id < 0 || class_id >= kNumMotionClasses) {
        throw std::invalid_argument("motion_class_name: class id " + std::to_string(class_id) +
                                    " out of range");
    }
    return names[class_id];
}

MotionState draw_motion_state(const SynthConfig& config, Rng& rng) {
    const double margin = config.size_max + 1.0;
    MotionState s;
    s.cx0 = rng.uniform(margin, config.width - 1 - margin);
    s.cy0 = rng.uniform(margin, config.height - 1 - margin);
    s.half0 = rng.uniform(config.size_min, config.size_max);
    s.speed = rng.uniform(config.speed_min, config.speed_max);
    return s;
}

namespace {

double coverage(double dist, double half) {
    return std::clamp(half - dist + 0.5, 0.0, 1.0);
}

void render_shape(Frame& frame, const SynthConfig& config, double cx, double cy, double half) {
    const int h = config.height;
    const int w = config.width;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v;
            if (config.shape == ShapeKind::Square) {
                v = coverage(std::fabs(x - cx), half) * coverage(std::fabs(y - cy), half);
            } else {
                const double dx = x - cx;
                const double dy = y - cy;
                v = coverage(std::sqrt(dx * dx + dy * dy), half);
            }
            const double value = config.brightness * v;
            for (int c = 0; c < config.channels; ++c) {
                frame.at(c, y, x) = value;
            }
        }
    }
}

// Largest per-frame speed that keeps the full trajectory inside the frame.
double clamp_speed(int class_id, const SynthConfig& config, const MotionState& s) {
    const int steps = std::max(config.frames_per_video - 1, 1);
    double avail = 0.0;
    switch (static_cast<MotionClass>(class_id)) {
        case MotionClass::Left: avail = s.cx0 - s.half0; break;
        case MotionClass::Right: avail = (config.width - 1 - s.half0) - s.cx0; break;
        case MotionClass::Up: avail = s.cy0 - s.half0; break;
        case MotionClass::Down: avail = (config.height - 1 - s.half0) - s.cy0; break;
        case MotionClass::Grow: {
            const double half_max = std::min(std::min(s.cx0, config.width - 1 - s.cx0),
                                             std::min(s.cy0, config.height - 1 - s.cy0));
            avail = half_max - s.half0;
            break;
        }
        case MotionClass::Shrink: avail = s.half0 - 1.0; break;
    }
    avail = std::max(avail, 0.0);
    return std::min(s.speed, avail / static_cast<double>(steps));
}

} // namespace

FrameSequence render_synth_video(int class_id, const SynthConfig& config, const MotionState& state,
                                 Rng& rng) {
    if (class_id < 0 || class_id >= kNumMotionClasses) {
        throw std::invalid_argument("render_synth_video: class id out of range");
    }
    if (config.frames_per_video < 2) {
        throw std::invalid_argument("render_synth_video: need at least 2 frames per video");
    }
    const double v = clamp_speed(class_id, config, state);

    FrameSequence seq;
    seq.label = class_id;
    seq.frames.reserve(static_cast<std::size_t>(config.frames_per_video));
    for (int t = 0; t < config.frames_per_video; ++t) {
        double cx = state.cx0;
        double cy = state.cy0;
        double half = state.half0;
        switch (static_cast<MotionClass>(class_id)) {
            case MotionClass::Left: cx -= v * t; break;
            case MotionClass::Right: cx += v * t; break;
            case MotionClass::Up: cy -= v * t; break;
            case MotionClass::Down: cy += v * t; break;
            case MotionClass::Grow: half += v * t; break;
            case MotionClass::Shrink: half -= v * t; break;
        }
        Frame f({config.channels, config.height, config.width});
        render_shape(f, config, cx, cy, half);
        if (config.noise > 0.0) {
            for (double& px : f.data) {
                px += config.noise * rng.normal();
            }
        }
        for (double& px : f.data) {
            px = std::clamp(px, 0.0, 1.0);
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

FrameSequence synth_video(int class_id, const SynthConfig& config, std::uint64_t instance_seed) {
    Rng rng(instance_seed);
    const MotionState state = draw_motion_state(config, rng);
    return render_synth_video(class_id, config, state, rng);
}

LabeledDataset make_dataset(const SynthConfig& config, int n_per_class,
                            const std::vector<double>& split_ratios) {
    if (n_per_class < 3) {
        throw std::invalid_argument("make_dataset: need at least 3 videos per class");
    }
    if (split_ratios.size() != 3) {
        throw std::invalid_argument("make_dataset: expected 3 split ratios (train,val,test)");
    }
    double ratio_sum = 0.0;
    for (double r : split_ratios) {
        if (r < 0.0) {
            throw std::invalid_argument("make_dataset: split ratios must be non-negative");
        }
        ratio_sum += r;
    }
    if (std::fabs(ratio_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("make_dataset: split ratios must sum to 1");
    }
    const int n_train = static_cast<int>(std::floor(split_ratios[0] * n_per_class + 1e-9));
    const int n_val = static_cast<int>(std::floor(split_ratios[1] * n_per_class + 1e-9));
    const int n_test = n_per_class - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw std::invalid_argument("make_dataset: split leaves a class absent from some split");
    }

    // Synthesize everything up front (independently seeded, parallel-safe),
    // then deal per-class shuffled slices into the splits.
    const int total = kNumMotionClasses * n_per_class;
    std::vector<FrameSequence> videos(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic)
    for (int idx = 0; idx < total; ++idx) {
        const int class_id = idx / n_per_class;
        videos[static_cast<std::size_t>(idx)] =
            synth_video(class_id, config, derive_seed(config.seed, static_cast<std::uint64_t>(idx)));
    }

    LabeledDataset ds;
    for (int c = 0; c < kNumMotionClasses; ++c) {
        std::vector<int> order(static_cast<std::size_t>(n_per_class));
        for (int i = 0; i < n_per_class; ++i) order[static_cast<std::size_t>(i)] = c * n_per_class + i;
        Rng rng(derive_seed(config.seed, 0x511e7ULL + static_cast<std::uint64_t>(c)));
        rng.shuffle(order);
        for (int i = 0; i < n_per_class; ++i) {
            FrameSequence& v = videos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            if (i < n_train) {
                ds.train.push_back(std::move(v));
            } else if (i < n_train + n_val) {
                ds.val.push_back(std::move(v));
            } else {
                ds.test.push_back(std::move(v));
            }
        }
    }
    return ds;
}

GenSampleBuild build_gen_samples(const std::vector<FrameSequence>& videos, int T, int stride) {
    if (T < 2) {
        throw std::invalid_argument("build_gen_samples: window length must be >= 2");
    }
    if (stride < 1) {
        throw std::invalid_argument("build_gen_samples: stride must be >= 1");
    }
    GenSampleBuild out;
    for (const FrameSequence& video : videos) {
        const int n = static_cast<int>(video.size());
        if (n < T + stride) {
            ++out.skipped_videos;
            continue;
        }
        for (int o = 0; o + stride + T <= n; o += stride) {
            FrameSequence cur, fut;
            cur.frames.assign(video.frames.begin() + o, video.frames.begin() + o + T);
            fut.frames.assign(video.frames.begin() + o + stride,
                              video.frames.begin() + o + stride + T);
            GenSample s;
            s.d_current = approximate_rank_pool(cur);
            s.d_next = approximate_rank_pool(fut);
            s.leading_future.assign(fut.frames.begin(), fut.frames.end() - 1);
            s.final_future = fut.frames.back();
            s.label = video.label;
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.png", index);
    return buf;
}

} // namespace

FrameSequence load_frames(const std::string& directory) {
    if (!fs::is_directory(directory)) {
        throw std::invalid_argument("load_frames: " + directory + " is not a directory");
    }
    std::vector<int> indices;
    for (const auto& entry : fs::directory_iterator(directory)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("frame_", 0) != 0 || name.size() < 11 ||
            name.compare(name.size() - 4, 4, ".png") != 0) {
            continue;
        }
        const std::string digits = name.substr(6, name.size() - 10);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
            continue;
        }
        indices.push_back(std::stoi(digits));
    }
    if (indices.empty()) {
        throw std::invalid_argument("load_frames: no frame_*.png files in " + directory);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int expected = static_cast<int>(i) + 1;
        if (indices[i] != expected) {
            throw MissingFrameError("load_frames: missing " + frame_filename(expected) + " in " +
                                    directory);
        }
    }

    FrameSequence seq;
    seq.frames.reserve(indices.size());
    for (int idx : indices) {
        seq.frames.push_back(read_png((fs::path(directory) / frame_filename(idx)).string()));
    }
    validate_sequence(seq, "load_frames");
    return seq;
}

void export_dynamic_image(const DynamicImage& d, const std::string& path, ExportMode mode) {
    if (mode == ExportMode::Raw) {
        write_dimg(d, path);
        return;
    }
    double mn = d.data.front();
    double mx = mn;
    for (double v : d.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    Tensor bytes(d.shape);
    if (mx - mn <= 0.0) {
        for (double& v : bytes.data) v = 128.0;
    } else {
        const double scale = 255.0 / (mx - mn);
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            bytes.data[i] = (d.data[i] - mn) * scale;
        }
    }
    write_png_bytes(bytes, path);
}

void persist_dataset(const LabeledDataset& dataset, const SynthConfig& config,
                     const std::string& directory) {
    fs::create_directories(directory);
    nlohmann::json manifest;
    manifest["format"] = "motionrank-dataset";
    manifest["version"] = 1;
    nlohmann::json classes = nlohmann::json::array();
    for (int c = 0; c < kNumMotionClasses; ++c) classes.push_back(motion_class_name(c));
    manifest["classes"] = classes;
    manifest["frame_shape"] = {config.channels, config.height, config.width};
    manifest["frames_per_video"] = config.frames_per_video;

    nlohmann::json videos = nlohmann::json::array();
    int video_index = 0;
    auto dump_split = [&](const std::vector<FrameSequence>& split, const char* split_name) {
        for (const FrameSequence& v : split) {
            char dirname[32];
            std::snprintf(dirname, sizeof(dirname), "video_%04d", video_index++);
            const fs::path vdir = fs::path(directory) / dirname;
            fs::create_directories(vdir);
            for (std::size_t t = 0; t < v.size(); ++t) {
                write_png(v.frames[t], (vdir / frame_filename(static_cast<int>(t) + 1)).string());
            }
            videos.push_back({{"path", dirname}, {"label", v.label}, {"split", split_name}});
        }
    };
    dump_split(dataset.train, "train");
    dump_split(dataset.val, "val");
    dump_split(dataset.test, "test");
    manifest["videos"] = videos;

    std::ofstream out(fs::path(directory) / "manifest.json", std::ios::trunc);
    if (!out) {
        throw std::runtime_error("persist_dataset: cannot write manifest in " + directory);
    }
    out << manifest.dump(2) << "\n";
}

LabeledDataset load_dataset(const std::string& directory) {
    std::ifstream in(fs::path(directory) / "manifest.json");
    if (!in) {
        throw std::invalid_argument("load_dataset: no manifest.json in " + directory);
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("load_dataset: malformed manifest in " + directory + ": " + e.what());
    }

    LabeledDataset ds;
    for (const auto& entry : manifest.at("videos")) {
        FrameSequence seq = load_frames((fs::path(directory) / entry.at("path").get<std::string>()).string());
        seq.label = entry.at("label").get<int>();
        const std::string split = entry.at("split").get<std::string>();
        if (split == "train") {
            ds.train.push_back(std::move(seq));
        } else if (split == "val") {
            ds.val.push_back(std::move(seq));
        } else if (split == "test") {
            ds.test.push_back(std::move(seq));
        } else {
            throw DecodeError("load_dataset: unknown split '" + split + "' in manifest");
        }
    }
    return ds;
}

} // namespace motionrank
