#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "motionrank/anticipate.hpp"
#include "motionrank/errors.hpp"
#include "motionrank/rng.hpp"

using namespace motionrank;

namespace {

ScoreVector vec(std::initializer_list<double> v) {
    return ScoreVector({static_cast<int>(v.size())}, std::vector<double>(v));
}

// Videos whose constant pixel value encodes the label; an oracle scorer can
// read the label straight off any frame.
FrameSequence constant_video(int label, int n_frames, int num_classes) {
    FrameSequence seq;
    seq.label = label;
    const double value = (label + 1.0) / (num_classes + 1.0);
    for (int t = 0; t < n_frames; ++t) {
        seq.frames.emplace_back(std::vector<int>{1, 4, 4}, value);
    }
    return seq;
}

AnticipatePipeline oracle_pipeline(int num_classes) {
    AnticipatePipeline p;
    p.score_frame = [num_classes](const Frame& f) {
        const int label =
            static_cast<int>(std::lround(f.data[0] * (num_classes + 1.0) - 1.0));
        ScoreVector s({num_classes}, 1e-6);
        s.data[static_cast<std::size_t>(label)] = 1.0;
        const double z = sum(s);
        s *= 1.0 / z;
        return s;
    };
    p.score_dynamic_image = [num_classes](const DynamicImage&) {
        return ScoreVector({num_classes}, 1.0 / num_classes);
    };
    return p;
}

} // namespace

TEST_CASE("generate_future with k = 0 is empty") {
    const DynamicImage d({1, 2, 2}, 0.5);
    auto identity = [](const DynamicImage& x) { return x; };
    CHECK(generate_future(identity, d, 0).empty());
    CHECK_THROWS_AS(generate_future(identity, d, -1), std::invalid_argument);
}

TEST_CASE("generate_future with an identity double returns k copies") {
    DynamicImage d({1, 2, 2}, std::vector<double>{1.0, -2.0, 3.0, 0.0});
    auto identity = [](const DynamicImage& x) { return x; };
    const auto out = generate_future(identity, d, 3);
    REQUIRE(out.size() == 3);
    for (const DynamicImage& g : out) {
        for (std::size_t i = 0; i < d.numel(); ++i) CHECK(g.data[i] == d.data[i]);
    }
}

TEST_CASE("fuse_scores with one stream and one vector is that vector") {
    auto [fused, predicted] = fuse_scores({vec({0.1, 0.7, 0.2})}, {}, {});
    CHECK(predicted == 1);
    CHECK(fused.data[1] == doctest::Approx(0.7));
}

TEST_CASE("fuse_scores uniform streams tie-break to class 0") {
    const ScoreVector u = vec({0.25, 0.25, 0.25, 0.25});
    auto [fused, predicted] = fuse_scores({u, u}, {u}, {u, u, u});
    CHECK(predicted == 0);
    for (double v : fused.data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("fuse_scores hand case: sum then renormalize") {
    auto [fused, predicted] = fuse_scores({vec({0.6, 0.4})}, {vec({0.2, 0.8})}, {});
    CHECK(fused.data[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(fused.data[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(predicted == 1);
}

TEST_CASE("fuse_scores rejects empty input and an empty stream changes nothing") {
    CHECK_THROWS_AS(fuse_scores({}, {}, {}), std::invalid_argument);
    auto [with_empty, p1] = fuse_scores({vec({0.3, 0.7})}, {}, {});
    auto [two_streams, p2] = fuse_scores({vec({0.3, 0.7})}, {vec({0.5, 0.5})}, {});
    CHECK(p1 == 1);
    CHECK(p2 == 1);
    CHECK(with_empty.data[1] == doctest::Approx(0.7));
    (void)two_streams;
}

TEST_CASE("fused vector is always a probability vector") {
    Rng rng(163);
    for (int rep = 0; rep < 25; ++rep) {
        auto random_stream = [&](int n) {
            std::vector<ScoreVector> s;
            for (int i = 0; i < n; ++i) {
                ScoreVector v({3});
                double z = 0.0;
                for (double& x : v.data) {
                    x = rng.uniform(0.01, 1.0);
                    z += x;
                }
                v *= 1.0 / z;
                s.push_back(std::move(v));
            }
            return s;
        };
        auto [fused, predicted] = fuse_scores(random_stream(static_cast<int>(rng.uniform_int(0, 3))),
                                              random_stream(static_cast<int>(rng.uniform_int(1, 3))),
                                              random_stream(static_cast<int>(rng.uniform_int(0, 3))));
        double z = 0.0;
        for (double v : fused.data) {
            CHECK(v >= 0.0);
            z += v;
        }
        CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(predicted >= 0);
        CHECK(predicted < 3);
    }
}

TEST_CASE("anticipate with k=0 matches a pipeline without any generator") {
    AnticipatePipeline with_gen = oracle_pipeline(3);
    with_gen.generator_step = [](const DynamicImage& d) { return d; };
    AnticipatePipeline without_gen = oracle_pipeline(3);

    const FrameSequence video = constant_video(1, 12, 3);
    const AnticipationResult a = anticipate(video, with_gen, 5, 1, 0);
    const AnticipationResult b = anticipate(video, without_gen, 5, 1, 0);
    CHECK(a.predicted_class == b.predicted_class);
    REQUIRE(a.fused.numel() == b.fused.numel());
    for (std::size_t i = 0; i < a.fused.numel(); ++i) {
        CHECK(a.fused.data[i] == b.fused.data[i]);
    }
    CHECK(a.generated_mean.numel() == 0);
}

TEST_CASE("anticipate works on prefixes shorter than the window") {
    const AnticipatePipeline p = oracle_pipeline(3);
    const FrameSequence video = constant_video(2, 3, 3); // 3 frames < T = 10
    const AnticipationResult r = anticipate(video, p, 10, 1, 0);
    CHECK(r.predicted_class == 2);
}

TEST_CASE("anticipate requires a generator only for k > 0") {
    const AnticipatePipeline p = oracle_pipeline(3);
    const FrameSequence video = constant_video(0, 8, 3);
    CHECK_NOTHROW(anticipate(video, p, 4, 1, 0));
    CHECK_THROWS_AS(anticipate(video, p, 4, 1, 2), std::invalid_argument);
}

TEST_CASE("evaluate_curve with an oracle classifier is 1.0 everywhere") {
    std::vector<FrameSequence> dataset;
    for (int label = 0; label < 3; ++label) {
        dataset.push_back(constant_video(label, 20, 3));
        dataset.push_back(constant_video(label, 17, 3));
    }
    const AnticipatePipeline p = oracle_pipeline(3);
    const std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const AnticipationCurve curve = evaluate_curve(dataset, p, 5, 1, 0, fractions);
    REQUIRE(curve.points.size() == 10);
    for (const auto& [fraction, accuracy] : curve.points) {
        CHECK(accuracy == 1.0);
    }
}

TEST_CASE("evaluate_curve validates fractions") {
    std::vector<FrameSequence> dataset = {constant_video(0, 10, 2)};
    const AnticipatePipeline p = oracle_pipeline(2);
    CHECK_THROWS_AS(evaluate_curve(dataset, p, 5, 1, 0, {0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_curve(dataset, p, 5, 1, 0, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_curve(dataset, p, 5, 1, 0, {0.5, 1.2}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_curve({}, p, 5, 1, 0, {0.5}), std::invalid_argument);
}

TEST_CASE("earliest_latest with an oracle is (1,1) and validates the fraction") {
    std::vector<FrameSequence> dataset = {constant_video(0, 10, 2), constant_video(1, 10, 2)};
    const AnticipatePipeline p = oracle_pipeline(2);
    const auto [earliest, latest] = earliest_latest(dataset, p, 5, 1, 0, 0.2);
    CHECK(earliest == 1.0);
    CHECK(latest == 1.0);
    CHECK_THROWS_AS(earliest_latest(dataset, p, 5, 1, 0, 1.0), std::invalid_argument);
}

TEST_CASE("k_sweep length and k=0 baseline consistency") {
    std::vector<FrameSequence> dataset = {constant_video(0, 12, 2), constant_video(1, 12, 2)};
    AnticipatePipeline p = oracle_pipeline(2);
    p.generator_step = [](const DynamicImage& d) { return d; };
    const auto sweep = k_sweep(dataset, p, 4, 1, 5, 0.5);
    REQUIRE(sweep.size() == 6);
    const AnticipationCurve curve = evaluate_curve(dataset, p, 4, 1, 0, {0.5});
    CHECK(sweep[0].second == curve.points[0].second);
}

TEST_CASE("curve and sweep CSV schemas") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "motionrank_test_csv";
    fs::create_directories(dir);

    AnticipationCurve curve;
    curve.points = {{0.1, 0.5}, {0.2, 0.75}};
    write_curve_csv(curve, 3, 42, (dir / "curve.csv").string());
    std::ifstream in(dir / "curve.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "fraction,accuracy,k,seed");
    std::getline(in, line);
    CHECK(line == "0.100000,0.500000,3,42");

    write_sweep_csv({{0, 0.25}, {1, 1.0}}, 0.2, 7, (dir / "sweep.csv").string());
    std::ifstream sin(dir / "sweep.csv");
    std::getline(sin, line);
    CHECK(line == "k,accuracy,fraction,seed");
    std::getline(sin, line);
    CHECK(line == "0,0.250000,0.200000,7");
}
