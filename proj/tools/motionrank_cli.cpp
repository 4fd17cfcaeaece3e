#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "motionrank/anticipate.hpp"
#include "motionrank/data.hpp"
#include "motionrank/gradcheck_suite.hpp"
#include "motionrank/image_io.hpp"
#include "motionrank/models.hpp"
#include "motionrank/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace motionrank;

namespace {

// Bad or missing flag values; mapped to exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Every tunable in one flat bag: defaults < MOTIONRANK_SEED env < --config
// JSON < command-line flags. The fully resolved bag is echoed to the run
// directory so a run can be reproduced from its own output.
struct RunConfig {
    std::uint64_t seed = 1;
    int jobs = 1;

    // synthetic dataset
    int frames_per_video = 40;
    int channels = 1;
    int height = 32;
    int width = 32;
    std::string shape = "square";
    double speed_min = 0.15;
    double speed_max = 0.5;
    double size_min = 3.0;
    double size_max = 5.0;
    double brightness = 0.9;
    double noise = 0.18;
    int n_per_class = 10;
    std::vector<double> split_ratios = {0.6, 0.2, 0.2};

    // dynamic-image windows
    int window = 10;
    int stride = 1;

    // architectures
    std::vector<int> gen_stages = {16, 32};
    std::vector<int> cls_stages = {8, 16};

    // training
    int batch_size = 32;
    int epochs = 30;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 0.1;
    std::string losses = "dl";

    // evaluation
    int k = 0;
    int k_max = 10;
    double fraction = 0.2;
    std::string fractions = "0.1..1.0";

    // paths
    std::string out;
    std::string data_dir;
    std::string frames_dir;
    std::string video_dir;
    std::string teacher_path;
    std::string static_path;
    std::string dynamic_path;
    std::string generator_path;
    std::string kind = "dynamic";
    std::string format = "raw";
    int frame_step = 1;
};

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["frames_per_video"] = c.frames_per_video;
    j["channels"] = c.channels;
    j["height"] = c.height;
    j["width"] = c.width;
    j["shape"] = c.shape;
    j["speed_min"] = c.speed_min;
    j["speed_max"] = c.speed_max;
    j["size_min"] = c.size_min;
    j["size_max"] = c.size_max;
    j["brightness"] = c.brightness;
    j["noise"] = c.noise;
    j["n_per_class"] = c.n_per_class;
    j["split_ratios"] = c.split_ratios;
    j["window"] = c.window;
    j["stride"] = c.stride;
    j["gen_stages"] = c.gen_stages;
    j["cls_stages"] = c.cls_stages;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["eps"] = c.eps;
    j["losses"] = c.losses;
    j["k"] = c.k;
    j["k_max"] = c.k_max;
    j["fraction"] = c.fraction;
    j["fractions"] = c.fractions;
    j["out"] = c.out;
    j["data_dir"] = c.data_dir;
    j["frames_dir"] = c.frames_dir;
    j["video_dir"] = c.video_dir;
    j["teacher_path"] = c.teacher_path;
    j["static_path"] = c.static_path;
    j["dynamic_path"] = c.dynamic_path;
    j["generator_path"] = c.generator_path;
    j["kind"] = c.kind;
    j["format"] = c.format;
    j["frame_step"] = c.frame_step;
    return j;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& value) {
    if (j.contains(key)) {
        value = j.at(key).get<T>();
    }
}

void from_json(const json& j, RunConfig& c) {
    get_if_present(j, "seed", c.seed);
    get_if_present(j, "jobs", c.jobs);
    get_if_present(j, "frames_per_video", c.frames_per_video);
    get_if_present(j, "channels", c.channels);
    get_if_present(j, "height", c.height);
    get_if_present(j, "width", c.width);
    get_if_present(j, "shape", c.shape);
    get_if_present(j, "speed_min", c.speed_min);
    get_if_present(j, "speed_max", c.speed_max);
    get_if_present(j, "size_min", c.size_min);
    get_if_present(j, "size_max", c.size_max);
    get_if_present(j, "brightness", c.brightness);
    get_if_present(j, "noise", c.noise);
    get_if_present(j, "n_per_class", c.n_per_class);
    get_if_present(j, "split_ratios", c.split_ratios);
    get_if_present(j, "window", c.window);
    get_if_present(j, "stride", c.stride);
    get_if_present(j, "gen_stages", c.gen_stages);
    get_if_present(j, "cls_stages", c.cls_stages);
    get_if_present(j, "batch_size", c.batch_size);
    get_if_present(j, "epochs", c.epochs);
    get_if_present(j, "lr", c.lr);
    get_if_present(j, "beta1", c.beta1);
    get_if_present(j, "beta2", c.beta2);
    get_if_present(j, "eps", c.eps);
    get_if_present(j, "losses", c.losses);
    get_if_present(j, "k", c.k);
    get_if_present(j, "k_max", c.k_max);
    get_if_present(j, "fraction", c.fraction);
    get_if_present(j, "fractions", c.fractions);
    get_if_present(j, "out", c.out);
    get_if_present(j, "data_dir", c.data_dir);
    get_if_present(j, "frames_dir", c.frames_dir);
    get_if_present(j, "video_dir", c.video_dir);
    get_if_present(j, "teacher_path", c.teacher_path);
    get_if_present(j, "static_path", c.static_path);
    get_if_present(j, "dynamic_path", c.dynamic_path);
    get_if_present(j, "generator_path", c.generator_path);
    get_if_present(j, "kind", c.kind);
    get_if_present(j, "format", c.format);
    get_if_present(j, "frame_step", c.frame_step);
}

SynthConfig synth_config(const RunConfig& c) {
    SynthConfig s;
    s.frames_per_video = c.frames_per_video;
    s.channels = c.channels;
    s.height = c.height;
    s.width = c.width;
    if (c.shape == "square") {
        s.shape = ShapeKind::Square;
    } else if (c.shape == "disc") {
        s.shape = ShapeKind::Disc;
    } else {
        throw UsageError("shape must be 'square' or 'disc', got '" + c.shape + "'");
    }
    s.speed_min = c.speed_min;
    s.speed_max = c.speed_max;
    s.size_min = c.size_min;
    s.size_max = c.size_max;
    s.brightness = c.brightness;
    s.noise = c.noise;
    s.seed = c.seed;
    return s;
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    t.batch_size = c.batch_size;
    t.lr = c.lr;
    t.beta1 = c.beta1;
    t.beta2 = c.beta2;
    t.eps = c.eps;
    t.epochs = c.epochs;
    t.losses = {false, false, false};
    t.seed = c.seed;
    return t;
}

LossSet parse_losses(const std::string& text) {
    LossSet s{false, false, false};
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        if (item == "dl") {
            s.dl = true;
        } else if (item == "sl") {
            s.sl = true;
        } else if (item == "cl") {
            s.cl = true;
        } else if (!item.empty()) {
            throw UsageError("unknown loss '" + item + "' (expected dl, sl, cl)");
        }
        pos = comma + 1;
    }
    if (s.none()) {
        throw UsageError("no losses enabled");
    }
    return s;
}

// "0.1..1.0", "0.1..1.0:0.05" or a comma list.
std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    const std::size_t range = text.find("..");
    if (range != std::string::npos) {
        const double lo = std::stod(text.substr(0, range));
        double step = 0.1;
        std::string rest = text.substr(range + 2);
        const std::size_t colon = rest.find(':');
        if (colon != std::string::npos) {
            step = std::stod(rest.substr(colon + 1));
            rest = rest.substr(0, colon);
        }
        const double hi = std::stod(rest);
        if (step <= 0.0) {
            throw UsageError("fraction step must be positive");
        }
        for (double v = lo; v <= hi + 1e-9; v += step) {
            out.push_back(std::min(v, 1.0));
        }
    } else {
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t comma = text.find(',', pos);
            if (comma == std::string::npos) comma = text.size();
            out.push_back(std::stod(text.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    if (out.empty()) {
        throw UsageError("no fractions given");
    }
    return out;
}

void echo_config(const RunConfig& c) {
    if (c.out.empty()) return;
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / "config.json", std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot write config.json under " + c.out);
    }
    f << to_json(c).dump(2) << "\n";
}

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw UsageError(std::string("missing required ") + flag);
    }
}

int num_classes_of(const LabeledDataset& ds) {
    int max_label = -1;
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
        for (const FrameSequence& v : *split) {
            max_label = std::max(max_label, v.label);
        }
    }
    if (max_label < 1) {
        throw std::invalid_argument("dataset has fewer than 2 classes");
    }
    return max_label + 1;
}

int cmd_synth_data(const RunConfig& c) {
    require_path(c.out, "--out");
    echo_config(c);
    const LabeledDataset ds = make_dataset(synth_config(c), c.n_per_class, c.split_ratios);
    persist_dataset(ds, synth_config(c), c.out);
    std::printf("wrote %zu train / %zu val / %zu test videos to %s\n", ds.train.size(),
                ds.val.size(), ds.test.size(), c.out.c_str());
    return 0;
}

int cmd_dynimg(const RunConfig& c) {
    require_path(c.frames_dir, "--frames");
    require_path(c.out, "--out");
    echo_config(c);
    const FrameSequence seq = load_frames(c.frames_dir);
    const auto dis = dynamic_image_sequence(seq, c.window, c.stride);
    const ExportMode mode = (c.format == "png") ? ExportMode::Png : ExportMode::Raw;
    const char* ext = (mode == ExportMode::Png) ? "png" : "dimg";
    for (std::size_t i = 0; i < dis.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "di_%06zu.%s", i + 1, ext);
        export_dynamic_image(dis[i], (fs::path(c.out) / name).string(), mode);
    }
    std::printf("wrote %zu dynamic images to %s\n", dis.size(), c.out.c_str());
    return 0;
}

int cmd_train_teacher(const RunConfig& c) {
    require_path(c.data_dir, "--data");
    require_path(c.out, "--out");
    echo_config(c);
    const LabeledDataset ds = load_dataset(c.data_dir);
    if (ds.train.empty()) {
        throw std::invalid_argument("dataset has no training videos");
    }

    TeacherKind kind;
    if (c.kind == "static") {
        kind = TeacherKind::Static;
    } else if (c.kind == "dynamic") {
        kind = TeacherKind::Dynamic;
    } else {
        throw UsageError("--kind must be 'static' or 'dynamic'");
    }

    ClassifierConfig cc;
    const Frame& sample = ds.train.front().frames.front();
    cc.in_channels = sample.shape[0];
    cc.height = sample.shape[1];
    cc.width = sample.shape[2];
    cc.stage_feature_maps = c.cls_stages;
    cc.num_classes = num_classes_of(ds);

    const auto result = train_teacher(ds.train, ds.val, kind, cc, train_config(c), c.window, c.stride);
    save_checkpoint(result.teacher, (fs::path(c.out) / "teacher.mrnk").string());
    write_teacher_log_csv(result.accuracy_log, (fs::path(c.out) / "log.csv").string());
    std::printf("final held-out frame-level accuracy: %.4f\n", result.accuracy_log.back().second);
    return 0;
}

int cmd_train_generator(const RunConfig& c) {
    require_path(c.data_dir, "--data");
    require_path(c.out, "--out");
    echo_config(c);
    const LabeledDataset ds = load_dataset(c.data_dir);

    TrainConfig tc = train_config(c);
    tc.losses = parse_losses(c.losses);

    ModelParams teacher;
    if (tc.losses.cl) {
        require_path(c.teacher_path, "--teacher");
        teacher = load_checkpoint(c.teacher_path);
    }

    const GenSampleBuild build = build_gen_samples(ds.train, c.window, c.stride);
    if (build.skipped_videos > 0) {
        std::fprintf(stderr, "warning: %d videos too short for window %d + stride %d\n",
                     build.skipped_videos, c.window, c.stride);
    }
    if (build.samples.empty()) {
        throw std::invalid_argument("no generator samples; videos too short");
    }

    GeneratorConfig gc;
    const DynamicImage& d0 = build.samples.front().d_current;
    gc.in_channels = d0.shape[0];
    gc.height = d0.shape[1];
    gc.width = d0.shape[2];
    gc.stage_feature_maps = c.gen_stages;

    const auto result =
        train_generator(build.samples, gc, tc.losses.cl ? &teacher : nullptr, tc);
    save_checkpoint(result.generator, (fs::path(c.out) / "generator.mrnk").string());
    write_generator_log_csv(result.log, (fs::path(c.out) / "log.csv").string());

    const EpochLoss& last = result.log.back();
    std::printf("epoch %d:", last.epoch);
    if (last.dl) std::printf(" dl=%.6f", *last.dl);
    if (last.sl) std::printf(" sl=%.6f", *last.sl);
    if (last.cl) std::printf(" cl=%.6f", *last.cl);
    std::printf(" (%zu samples)\n", build.samples.size());
    return 0;
}

AnticipateModels load_models(const RunConfig& c, ModelParams& static_m, ModelParams& dynamic_m,
                             ModelParams& generator_m) {
    require_path(c.static_path, "--static");
    require_path(c.dynamic_path, "--dynamic");
    static_m = load_checkpoint(c.static_path);
    dynamic_m = load_checkpoint(c.dynamic_path);
    AnticipateModels m;
    m.static_model = &static_m;
    m.dynamic_model = &dynamic_m;
    if (c.k > 0 || !c.generator_path.empty()) {
        require_path(c.generator_path, "--generator");
        generator_m = load_checkpoint(c.generator_path);
        m.generator = &generator_m;
    }
    return m;
}

int cmd_anticipate(const RunConfig& c) {
    require_path(c.video_dir, "--video");
    ModelParams sm, dm, gm;
    const AnticipateModels models = load_models(c, sm, dm, gm);
    const FrameSequence prefix = load_frames(c.video_dir);
    AnticipatePipeline pipeline = make_pipeline(models);
    pipeline.frame_step = c.frame_step;
    const AnticipationResult r = anticipate(prefix, pipeline, c.window, c.stride, c.k);

    json out;
    out["predicted_class"] = r.predicted_class;
    out["k"] = r.k_used;
    out["fused"] = r.fused.data;
    out["static_mean"] = r.static_mean.data;
    out["dynamic_mean"] = r.dynamic_mean.data;
    out["generated_mean"] = r.generated_mean.data;
    std::cout << out.dump(2) << "\n";

    if (!c.out.empty()) {
        echo_config(c);
        std::ofstream f(fs::path(c.out) / "result.json", std::ios::trunc);
        f << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_evaluate(const RunConfig& c) {
    require_path(c.data_dir, "--data");
    require_path(c.out, "--out");
    echo_config(c);
    ModelParams sm, dm, gm;
    const AnticipateModels models = load_models(c, sm, dm, gm);
    const LabeledDataset ds = load_dataset(c.data_dir);
    if (ds.test.empty()) {
        throw std::invalid_argument("dataset has no test split");
    }
    AnticipatePipeline pipeline = make_pipeline(models);
    pipeline.frame_step = c.frame_step;
    const AnticipationCurve curve =
        evaluate_curve(ds.test, pipeline, c.window, c.stride, c.k, parse_fractions(c.fractions));
    write_curve_csv(curve, c.k, c.seed, (fs::path(c.out) / "curve.csv").string());
    for (const auto& [fraction, accuracy] : curve.points) {
        std::printf("fraction %.2f: accuracy %.4f\n", fraction, accuracy);
    }
    return 0;
}

int cmd_k_sweep(const RunConfig& c) {
    require_path(c.data_dir, "--data");
    require_path(c.out, "--out");
    echo_config(c);
    ModelParams sm, dm, gm;
    RunConfig with_gen = c;
    with_gen.k = std::max(c.k_max, 1); // force generator load
    const AnticipateModels models = load_models(with_gen, sm, dm, gm);
    const LabeledDataset ds = load_dataset(c.data_dir);
    if (ds.test.empty()) {
        throw std::invalid_argument("dataset has no test split");
    }
    AnticipatePipeline pipeline = make_pipeline(models);
    pipeline.frame_step = c.frame_step;
    const auto sweep = k_sweep(ds.test, pipeline, c.window, c.stride, c.k_max, c.fraction);
    write_sweep_csv(sweep, c.fraction, c.seed, (fs::path(c.out) / "sweep.csv").string());
    for (const auto& [k, accuracy] : sweep) {
        std::printf("k %d: accuracy %.4f\n", k, accuracy);
    }
    return 0;
}

int cmd_gradcheck(const RunConfig&) {
    const auto items = run_gradcheck_suite();
    bool all_pass = true;
    for (const SuiteItem& item : items) {
        std::printf("%-28s max_rel_err %.3e (threshold %.0e) %s\n", item.name.c_str(),
                    item.max_rel_err, item.threshold, item.pass ? "PASS" : "FAIL");
        all_pass = all_pass && item.pass;
    }
    if (!all_pass) {
        throw std::runtime_error("gradient check suite failed");
    }
    return 0;
}

std::string find_config_path(int argc, char** argv) {
    for (int i = 1; i < argc - 1; ++i) {
        const std::string a = argv[i];
        if (a == "--config") return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    if (const char* env_seed = std::getenv("MOTIONRANK_SEED")) {
        cfg.seed = std::strtoull(env_seed, nullptr, 10);
    }
    const std::string config_path = find_config_path(argc, argv);
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) {
            std::fprintf(stderr, "error: cannot open config %s\n", config_path.c_str());
            return 1;
        }
        try {
            json j;
            f >> j;
            from_json(j, cfg);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: bad config %s: %s\n", config_path.c_str(), e.what());
            return 1;
        }
    }

    CLI::App app{"rank-pooled dynamic images, future-motion generation and action anticipation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON config file; flags override its values");
    app.add_option("--seed", cfg.seed, "master seed (default from MOTIONRANK_SEED)");
    app.add_option("--jobs", cfg.jobs, "worker threads (1 = fully sequential)");

    auto* synth = app.add_subcommand("synth-data", "generate and persist a synthetic motion dataset");
    synth->fallthrough();
    synth->add_option("--out", cfg.out, "output dataset directory");
    synth->add_option("--n-per-class", cfg.n_per_class, "videos per class");
    synth->add_option("--frames", cfg.frames_per_video, "frames per video");
    synth->add_option("--height", cfg.height, "frame height");
    synth->add_option("--width", cfg.width, "frame width");
    synth->add_option("--shape", cfg.shape, "square|disc");
    synth->add_option("--noise", cfg.noise, "additive noise amplitude");
    synth->add_option("--speed-min", cfg.speed_min, "min speed, px/frame");
    synth->add_option("--speed-max", cfg.speed_max, "max speed, px/frame");

    auto* dynimg = app.add_subcommand("dynimg", "compute dynamic images for a frame directory");
    dynimg->fallthrough();
    dynimg->add_option("--frames", cfg.frames_dir, "directory of frame_NNNNNN.png files");
    dynimg->add_option("--window", cfg.window, "window length T");
    dynimg->add_option("--stride", cfg.stride, "window stride");
    dynimg->add_option("--out", cfg.out, "output directory");
    dynimg->add_option("--format", cfg.format, "raw|png");

    auto* teach = app.add_subcommand("train-teacher", "train a static or dynamic classifier");
    teach->fallthrough();
    teach->add_option("--data", cfg.data_dir, "dataset directory (manifest.json)");
    teach->add_option("--kind", cfg.kind, "static|dynamic");
    teach->add_option("--out", cfg.out, "output directory");
    teach->add_option("--epochs", cfg.epochs, "training epochs");
    teach->add_option("--batch-size", cfg.batch_size, "batch size");
    teach->add_option("--lr", cfg.lr, "learning rate");
    teach->add_option("--window", cfg.window, "window length T (dynamic kind)");
    teach->add_option("--stride", cfg.stride, "window stride (dynamic kind)");
    teach->add_option("--cls-stages", cfg.cls_stages, "classifier conv widths")->delimiter(',');

    auto* gen = app.add_subcommand("train-generator", "train the future dynamic-image generator");
    gen->fallthrough();
    gen->add_option("--data", cfg.data_dir, "dataset directory");
    gen->add_option("--losses", cfg.losses, "comma list out of dl,sl,cl");
    gen->add_option("--teacher", cfg.teacher_path, "frozen teacher checkpoint (needed for cl)");
    gen->add_option("--out", cfg.out, "output directory");
    gen->add_option("--epochs", cfg.epochs, "training epochs");
    gen->add_option("--batch-size", cfg.batch_size, "batch size");
    gen->add_option("--lr", cfg.lr, "learning rate");
    gen->add_option("--window", cfg.window, "window length T");
    gen->add_option("--stride", cfg.stride, "window stride");
    gen->add_option("--gen-stages", cfg.gen_stages, "encoder feature maps")->delimiter(',');

    auto* antic = app.add_subcommand("anticipate", "predict the action of a partially observed video");
    antic->fallthrough();
    antic->add_option("--video", cfg.video_dir, "directory of observed frames");
    antic->add_option("--static", cfg.static_path, "static classifier checkpoint");
    antic->add_option("--dynamic", cfg.dynamic_path, "dynamic classifier checkpoint");
    antic->add_option("--generator", cfg.generator_path, "generator checkpoint");
    antic->add_option("--k", cfg.k, "future dynamic images to generate");
    antic->add_option("--window", cfg.window, "window length T");
    antic->add_option("--stride", cfg.stride, "window stride");
    antic->add_option("--frame-step", cfg.frame_step, "score every n-th observed frame");
    antic->add_option("--out", cfg.out, "optional output directory");

    auto* eval = app.add_subcommand("evaluate", "accuracy vs fraction-observed curve on the test split");
    eval->fallthrough();
    eval->add_option("--data", cfg.data_dir, "dataset directory");
    eval->add_option("--static", cfg.static_path, "static classifier checkpoint");
    eval->add_option("--dynamic", cfg.dynamic_path, "dynamic classifier checkpoint");
    eval->add_option("--generator", cfg.generator_path, "generator checkpoint");
    eval->add_option("--k", cfg.k, "future dynamic images per prediction");
    eval->add_option("--fractions", cfg.fractions, "e.g. 0.1..1.0 or 0.2,0.5,1.0");
    eval->add_option("--window", cfg.window, "window length T");
    eval->add_option("--stride", cfg.stride, "window stride");
    eval->add_option("--frame-step", cfg.frame_step, "score every n-th observed frame");
    eval->add_option("--out", cfg.out, "output directory");

    auto* sweep = app.add_subcommand("k-sweep", "accuracy for each k in 0..k-max at a fixed fraction");
    sweep->fallthrough();
    sweep->add_option("--data", cfg.data_dir, "dataset directory");
    sweep->add_option("--static", cfg.static_path, "static classifier checkpoint");
    sweep->add_option("--dynamic", cfg.dynamic_path, "dynamic classifier checkpoint");
    sweep->add_option("--generator", cfg.generator_path, "generator checkpoint");
    sweep->add_option("--k-max", cfg.k_max, "largest k");
    sweep->add_option("--fraction", cfg.fraction, "observed fraction");
    sweep->add_option("--window", cfg.window, "window length T");
    sweep->add_option("--stride", cfg.stride, "window stride");
    sweep->add_option("--frame-step", cfg.frame_step, "score every n-th observed frame");
    sweep->add_option("--out", cfg.out, "output directory");

    auto* gc = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
    gc->fallthrough();
    (void)gc;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

#ifdef _OPENMP
    omp_set_num_threads(std::max(cfg.jobs, 1));
#endif

    try {
        if (synth->parsed()) return cmd_synth_data(cfg);
        if (dynimg->parsed()) return cmd_dynimg(cfg);
        if (teach->parsed()) return cmd_train_teacher(cfg);
        if (gen->parsed()) return cmd_train_generator(cfg);
        if (antic->parsed()) return cmd_anticipate(cfg);
        if (eval->parsed()) return cmd_evaluate(cfg);
        if (sweep->parsed()) return cmd_k_sweep(cfg);
        if (gc->parsed()) return cmd_gradcheck(cfg);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
