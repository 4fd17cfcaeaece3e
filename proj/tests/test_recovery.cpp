#include <doctest.h>

#include <vector>

#include "motionrank/errors.hpp"
#include "motionrank/recovery.hpp"
#include "motionrank/rng.hpp"

using namespace motionrank;

namespace {

Frame random_frame(Rng& rng, int h, int w) {
    Frame f({1, h, w});
    for (double& v : f.data) v = rng.uniform(0.0, 1.0);
    return f;
}

} // namespace

TEST_CASE("recover_last_frame inverts the T=3 pooling identity exactly") {
    Rng rng(59);
    const Frame a = random_frame(rng, 3, 3);
    const Frame b = random_frame(rng, 3, 3);
    const Frame c = random_frame(rng, 3, 3);
    FrameSequence window;
    window.frames = {a, b, c};
    const DynamicImage d = approximate_rank_pool(window);
    const Tensor rec = recover_last_frame(d, {a, b}, 3);
    for (std::size_t i = 0; i < rec.numel(); ++i) {
        CHECK(rec.data[i] == doctest::Approx(c.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("pool-then-recover round trip for T = 2..16") {
    Rng rng(61);
    for (int T = 2; T <= 16; ++T) {
        for (int rep = 0; rep < 5; ++rep) {
            FrameSequence window;
            for (int t = 0; t < T; ++t) window.frames.push_back(random_frame(rng, 4, 5));
            const DynamicImage d = approximate_rank_pool(window);
            std::vector<Frame> leading(window.frames.begin(), window.frames.end() - 1);
            const Tensor rec = recover_last_frame(d, leading, T);
            for (std::size_t i = 0; i < rec.numel(); ++i) {
                CHECK(std::fabs(rec.data[i] - window.frames.back().data[i]) < 1e-9);
            }
        }
    }
}

TEST_CASE("recover_last_frame rejects the degenerate T=1 window") {
    const DynamicImage d({1, 2, 2}, 0.5);
    CHECK_THROWS_AS(recover_last_frame(d, {}, 1), DegenerateWindowError);
}

TEST_CASE("recover_last_frame validates the leading frame count and shape") {
    Rng rng(67);
    const DynamicImage d({1, 3, 3}, 0.1);
    CHECK_THROWS_AS(recover_last_frame(d, {random_frame(rng, 3, 3)}, 3), std::invalid_argument);
    CHECK_THROWS_AS(recover_last_frame(d, {random_frame(rng, 2, 2), random_frame(rng, 2, 2)}, 3),
                    ShapeError);
}

TEST_CASE("recover_last_frame is affine in D with slope 1/alpha_T") {
    Rng rng(71);
    const int T = 5;
    std::vector<Frame> leading;
    for (int t = 0; t < T - 1; ++t) leading.push_back(random_frame(rng, 3, 3));
    DynamicImage d({1, 3, 3});
    for (double& v : d.data) v = rng.uniform(-2.0, 2.0);

    const double alpha_last = coefficients(T).alpha.back();
    const Tensor base = recover_last_frame(d, leading, T);
    const Tensor scaled = recover_last_frame(d * 3.0, leading, T);
    for (std::size_t i = 0; i < base.numel(); ++i) {
        const double delta = scaled.data[i] - base.data[i];
        CHECK(delta == doctest::Approx(2.0 * d.data[i] / alpha_last).epsilon(1e-9));
    }
}

TEST_CASE("clamp_to_frame clips into [0,1]") {
    Tensor x({1, 1, 3}, std::vector<double>{0.5, -0.2, 1.7});
    const Frame f = clamp_to_frame(x);
    CHECK(f.data[0] == 0.5);
    CHECK(f.data[1] == 0.0);
    CHECK(f.data[2] == 1.0);
}
