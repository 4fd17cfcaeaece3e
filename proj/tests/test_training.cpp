#include <doctest.h>

#include <cmath>
#include <set>

#include "motionrank/data.hpp"
#include "motionrank/errors.hpp"
#include "motionrank/models.hpp"
#include "motionrank/recovery.hpp"
#include "motionrank/rng.hpp"
#include "motionrank/training.hpp"

using namespace motionrank;

namespace {

DynamicImage random_di(Rng& rng, int h, int w, double range = 2.0) {
    DynamicImage d({1, h, w});
    for (double& v : d.data) v = rng.uniform(-range, range);
    return d;
}

Frame random_frame(Rng& rng, int h, int w) {
    Frame f({1, h, w});
    for (double& v : f.data) v = rng.uniform(0.0, 1.0);
    return f;
}

// Tiny pool-consistent samples for trainer tests.
std::vector<GenSample> toy_samples(Rng& rng, int n, int h, int w, int T) {
    std::vector<GenSample> samples;
    for (int i = 0; i < n; ++i) {
        FrameSequence cur, fut;
        for (int t = 0; t < T; ++t) cur.frames.push_back(random_frame(rng, h, w));
        for (int t = 0; t < T; ++t) fut.frames.push_back(random_frame(rng, h, w));
        GenSample s;
        s.d_current = approximate_rank_pool(cur);
        s.d_next = approximate_rank_pool(fut);
        s.leading_future.assign(fut.frames.begin(), fut.frames.end() - 1);
        s.final_future = fut.frames.back();
        s.label = i % 2;
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace

TEST_CASE("dynamic_loss basic values") {
    const DynamicImage a({1, 2, 2}, 0.0);
    const DynamicImage b({1, 2, 2}, 1.0);
    CHECK(dynamic_loss(a, a).first == 0.0);
    CHECK(dynamic_loss(a, b).first == doctest::Approx(1.0).epsilon(1e-15));
    const DynamicImage c({1, 3, 3}, 0.0);
    CHECK_THROWS_AS(dynamic_loss(a, c), ShapeError);
}

TEST_CASE("static_loss is zero when d_hat is the true pooled window") {
    Rng rng(107);
    const int T = 4;
    FrameSequence window;
    for (int t = 0; t < T; ++t) window.frames.push_back(random_frame(rng, 4, 4));
    const DynamicImage pooled = approximate_rank_pool(window);
    std::vector<Frame> leading(window.frames.begin(), window.frames.end() - 1);
    auto [loss, grad] = static_loss(pooled, leading, window.frames.back(), T);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(max_abs(grad) < 1e-12);

    CHECK_THROWS_AS(static_loss(pooled, {}, window.frames.back(), 1), DegenerateWindowError);
}

TEST_CASE("classification_loss against a zero-head teacher is ln C") {
    ClassifierConfig cfg;
    cfg.height = 8;
    cfg.width = 8;
    cfg.stage_feature_maps = {2};
    cfg.num_classes = 6;
    ModelParams teacher = init_classifier(cfg, 11);
    teacher.tensors.at("head.W") *= 0.0;
    teacher.tensors.at("head.b") *= 0.0;

    Rng rng(109);
    const DynamicImage d = random_di(rng, 8, 8);
    auto [loss, grad] = classification_loss(d, 2, teacher);
    CHECK(loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(grad.all_finite());

    const ModelParams not_teacher = init_generator(GeneratorConfig{}, 1);
    CHECK_THROWS_AS(classification_loss(d, 2, not_teacher), std::invalid_argument);
}

TEST_CASE("split_batch partitions 32 into {11,11,10}") {
    const auto parts = split_batch(32, {true, true, true}, 5);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].size() == 11);
    CHECK(parts[1].size() == 11);
    CHECK(parts[2].size() == 10);

    std::set<std::size_t> seen;
    for (const auto& p : parts) {
        for (std::size_t i : p) {
            CHECK(i < 32);
            CHECK(seen.insert(i).second); // disjoint
        }
    }
    CHECK(seen.size() == 32); // exhaustive
}

TEST_CASE("split_batch with one loss returns the whole batch") {
    const auto parts = split_batch(7, {true, false, false}, 1);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].size() == 7);
}

TEST_CASE("split_batch is seed-deterministic and validates inputs") {
    const auto a = split_batch(16, {true, false, true}, 99);
    const auto b = split_batch(16, {true, false, true}, 99);
    CHECK(a == b);
    const auto c = split_batch(16, {true, false, true}, 100);
    CHECK(a != c);
    CHECK_THROWS_AS(split_batch(2, {true, true, true}, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_batch(8, {false, false, false}, 1), std::invalid_argument);
}

TEST_CASE("train_generator with DL only reduces the loss on a toy set") {
    Rng rng(113);
    const auto samples = toy_samples(rng, 5, 8, 8, 3);
    GeneratorConfig gc;
    gc.height = 8;
    gc.width = 8;
    gc.stage_feature_maps = {2, 3};
    TrainConfig tc;
    tc.batch_size = 5;
    tc.epochs = 30;
    tc.lr = 1e-2;
    tc.losses = {true, false, false};
    tc.seed = 3;
    const auto result = train_generator(samples, gc, nullptr, tc);
    REQUIRE(result.log.size() == 30);
    CHECK(result.log.front().dl.has_value());
    CHECK(*result.log.back().dl < *result.log.front().dl);
}

TEST_CASE("train_generator is bit-deterministic for a fixed config") {
    Rng rng(127);
    const auto samples = toy_samples(rng, 6, 8, 8, 3);
    GeneratorConfig gc;
    gc.height = 8;
    gc.width = 8;
    gc.stage_feature_maps = {2};
    TrainConfig tc;
    tc.batch_size = 3;
    tc.epochs = 3;
    tc.losses = {true, true, false};
    tc.seed = 17;
    const auto a = train_generator(samples, gc, nullptr, tc);
    const auto b = train_generator(samples, gc, nullptr, tc);
    for (const auto& [name, t] : a.generator.tensors) {
        const Tensor& tb = b.generator.tensors.at(name);
        for (std::size_t i = 0; i < t.numel(); ++i) CHECK(t.data[i] == tb.data[i]);
    }
}

TEST_CASE("train_generator validates its configuration") {
    Rng rng(131);
    const auto samples = toy_samples(rng, 4, 8, 8, 3);
    GeneratorConfig gc;
    gc.height = 8;
    gc.width = 8;
    TrainConfig tc;
    tc.losses = {false, false, false};
    CHECK_THROWS_AS(train_generator(samples, gc, nullptr, tc), std::invalid_argument);
    tc.losses = {true, false, true};
    CHECK_THROWS_AS(train_generator(samples, gc, nullptr, tc), std::invalid_argument); // no teacher
    tc.losses = {true, false, false};
    CHECK_THROWS_AS(train_generator({}, gc, nullptr, tc), std::invalid_argument);
}

TEST_CASE("teacher params are byte-identical after CL training steps") {
    Rng rng(137);
    ClassifierConfig ccfg;
    ccfg.height = 8;
    ccfg.width = 8;
    ccfg.stage_feature_maps = {2};
    ccfg.num_classes = 2;
    const ModelParams teacher = init_classifier(ccfg, 23);
    const auto before = serialize_params(teacher);

    const auto samples = toy_samples(rng, 6, 8, 8, 3);
    GeneratorConfig gc;
    gc.height = 8;
    gc.width = 8;
    gc.stage_feature_maps = {2};
    TrainConfig tc;
    tc.batch_size = 3;
    tc.epochs = 2;
    tc.losses = {true, false, true};
    const auto result = train_generator(samples, gc, &teacher, tc);
    (void)result;
    CHECK(serialize_params(teacher) == before);
}

TEST_CASE("classifier_accuracy of a zero-head classifier is exactly 1/C on balanced data") {
    ClassifierConfig cfg;
    cfg.height = 8;
    cfg.width = 8;
    cfg.stage_feature_maps = {2};
    cfg.num_classes = 4;
    ModelParams zero_head = init_classifier(cfg, 29);
    zero_head.tensors.at("head.W") *= 0.0;
    zero_head.tensors.at("head.b") *= 0.0;

    Rng rng(139);
    std::vector<std::pair<Tensor, int>> items;
    for (int label = 0; label < 4; ++label) {
        for (int i = 0; i < 3; ++i) items.emplace_back(random_di(rng, 8, 8), label);
    }
    CHECK(classifier_accuracy(zero_head, items) == 0.25);
}

TEST_CASE("train_teacher is deterministic and rejects single-class data") {
    SynthConfig sc;
    sc.height = 16;
    sc.width = 16;
    sc.size_min = 2.0;
    sc.size_max = 3.0;
    sc.frames_per_video = 12;
    sc.noise = 0.02;
    sc.seed = 5;
    std::vector<FrameSequence> train, val;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 2; ++i) {
            train.push_back(synth_video(c, sc, derive_seed(5, static_cast<std::uint64_t>(c * 2 + i))));
            val.push_back(synth_video(c, sc, derive_seed(6, static_cast<std::uint64_t>(c * 2 + i))));
        }
    }
    ClassifierConfig cc;
    cc.height = 16;
    cc.width = 16;
    cc.stage_feature_maps = {2};
    cc.num_classes = 2;
    TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs = 2;
    tc.seed = 31;

    const auto a = train_teacher(train, val, TeacherKind::Dynamic, cc, tc, 6, 2);
    const auto b = train_teacher(train, val, TeacherKind::Dynamic, cc, tc, 6, 2);
    REQUIRE(a.accuracy_log.size() == b.accuracy_log.size());
    for (std::size_t i = 0; i < a.accuracy_log.size(); ++i) {
        CHECK(a.accuracy_log[i].second == b.accuracy_log[i].second);
    }

    std::vector<FrameSequence> one_class(train.begin(), train.begin() + 2);
    CHECK_THROWS_AS(train_teacher(one_class, {}, TeacherKind::Static, cc, tc, 6, 2),
                    std::invalid_argument);
}

TEST_CASE("augment involution and identity") {
    Rng rng(149);
    FrameSequence seq;
    seq.label = 3;
    for (int t = 0; t < 4; ++t) {
        Frame f({1, 5, 6});
        for (double& v : f.data) v = rng.uniform(0.0, 1.0);
        seq.frames.push_back(std::move(f));
    }
    const FrameSequence flipped_twice = augment(augment(seq, {true, 0, 0}), {true, 0, 0});
    const FrameSequence same = augment(seq, {false, 0, 0});
    for (std::size_t t = 0; t < seq.size(); ++t) {
        for (std::size_t i = 0; i < seq.frames[t].numel(); ++i) {
            CHECK(flipped_twice.frames[t].data[i] == seq.frames[t].data[i]);
            CHECK(same.frames[t].data[i] == seq.frames[t].data[i]);
        }
    }
    CHECK(flipped_twice.label == 3);
    CHECK_THROWS_AS(augment(seq, {false, 6, 0}), std::invalid_argument);
    CHECK_THROWS_AS(augment(seq, {false, 0, -5}), std::invalid_argument);
}

TEST_CASE("hflip commutes with approximate_rank_pool") {
    Rng rng(151);
    FrameSequence seq;
    for (int t = 0; t < 5; ++t) {
        Frame f({1, 4, 6});
        for (double& v : f.data) v = rng.uniform(0.0, 1.0);
        seq.frames.push_back(std::move(f));
    }
    const DynamicImage pooled_flipped = approximate_rank_pool(augment(seq, {true, 0, 0}));
    DynamicImage flipped_pooled = approximate_rank_pool(seq);
    // flip the pooled image in x
    const int h = 4, w = 6;
    DynamicImage manual({1, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            manual.at(0, y, x) = flipped_pooled.at(0, y, w - 1 - x);
        }
    }
    for (std::size_t i = 0; i < manual.numel(); ++i) {
        CHECK(pooled_flipped.data[i] == doctest::Approx(manual.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("zero-shift augment keeps pooled dynamics; shifted pooling commutes too") {
    Rng rng(157);
    FrameSequence seq;
    for (int t = 0; t < 4; ++t) {
        Frame f({1, 5, 5});
        for (double& v : f.data) v = rng.uniform(0.0, 1.0);
        seq.frames.push_back(std::move(f));
    }
    const AugmentOps shift{false, 2, -1};
    const DynamicImage pooled_shifted = approximate_rank_pool(augment(seq, shift));
    const DynamicImage pooled = approximate_rank_pool(seq);
    // Shift with zero fill is linear, so pooling and shifting commute exactly.
    FrameSequence pooled_seq;
    Frame pooled_as_frame = clamp_to_frame(pooled); // not used; shift manually instead
    (void)pooled_as_frame;
    DynamicImage manual({1, 5, 5});
    for (int y = 0; y < 5; ++y) {
        const int sy = y - shift.dy;
        if (sy < 0 || sy >= 5) continue;
        for (int x = 0; x < 5; ++x) {
            const int sx = x - shift.dx;
            if (sx < 0 || sx >= 5) continue;
            manual.at(0, y, x) = pooled.at(0, sy, sx);
        }
    }
    for (std::size_t i = 0; i < manual.numel(); ++i) {
        CHECK(pooled_shifted.data[i] == doctest::Approx(manual.data[i]).epsilon(1e-12));
    }
}
