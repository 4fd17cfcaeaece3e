#include "motionrank/rankpool.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "motionrank/errors.hpp"

namespace motionrank {

void validate_frame(const Frame& f, const char* what) {
    if (f.rank() != 3 || (f.shape[0] != 1 && f.shape[0] != 3)) {
        throw ShapeError(std::string(what) + ": frame must be {C,H,W} with C in {1,3}, got " +
                         shape_str(f.shape));
    }
    for (double v : f.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw NumericError(std::string(what) + ": frame pixel " + std::to_string(v) +
                               " outside [0,1]");
        }
    }
}

void validate_sequence(const FrameSequence& seq, const char* what) {
    if (seq.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty frame sequence");
    }
    for (const Frame& f : seq.frames) {
        if (!f.same_shape(seq.frames.front())) {
            throw ShapeError(std::string(what) + ": frames differ in shape, " +
                             shape_str(seq.frames.front().shape) + " vs " + shape_str(f.shape));
        }
    }
}

double harmonic(int t) {
    if (t < 0) {
        throw std::invalid_argument("harmonic: t must be >= 0");
    }
    double h = 0.0;
    for (int i = 1; i <= t; ++i) {
        h += 1.0 / static_cast<double>(i);
    }
    return h;
}

CoefficientVector coefficients(int T) {
    if (T <= 0) {
        throw std::invalid_argument("coefficients: window length must be >= 1, got " + std::to_string(T));
    }
    CoefficientVector cv;
    cv.T = T;
    cv.alpha.resize(static_cast<std::size_t>(T));
    const double hT = harmonic(T);
    double h_prev = 0.0; // H_{t-1}
    for (int t = 1; t <= T; ++t) {
        cv.alpha[static_cast<std::size_t>(t - 1)] =
            2.0 * (T - t + 1) - (T + 1) * (hT - h_prev);
        h_prev += 1.0 / static_cast<double>(t);
    }
    return cv;
}

DynamicImage approximate_rank_pool(const FrameSequence& window) {
    validate_sequence(window, "approximate_rank_pool");
    const CoefficientVector cv = coefficients(static_cast<int>(window.size()));
    DynamicImage d(window.frames.front().shape);
    for (std::size_t t = 0; t < window.size(); ++t) {
        const double a = cv.alpha[t];
        const Frame& f = window.frames[t];
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            d.data[i] += a * f.data[i];
        }
    }
    return d;
}

std::vector<Window> sliding_windows(int num_frames, int T, int stride) {
    if (T < 1) {
        throw std::invalid_argument("sliding_windows: T must be >= 1");
    }
    if (stride < 1) {
        throw std::invalid_argument("sliding_windows: stride must be >= 1");
    }
    if (num_frames < 1) {
        throw std::invalid_argument("sliding_windows: empty video");
    }

    std::vector<Window> windows;
    if (num_frames < T) {
        windows.push_back({0, num_frames});
        return windows;
    }
    int start = 0;
    while (start + T <= num_frames) {
        windows.push_back({start, T});
        start += stride;
    }
    // Trailing partial window, only when the last full window left frames
    // at the end of the video uncovered.
    const int last_end = windows.back().start + T;
    if (start < num_frames && last_end < num_frames) {
        windows.push_back({start, num_frames - start});
    }
    return windows;
}

std::vector<DynamicImage> dynamic_image_sequence(const FrameSequence& video, int T, int stride) {
    validate_sequence(video, "dynamic_image_sequence");
    const auto windows = sliding_windows(static_cast<int>(video.size()), T, stride);
    std::vector<DynamicImage> out(windows.size());
#pragma omp parallel for schedule(static) if (windows.size() > 4)
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        FrameSequence win;
        win.frames.assign(video.frames.begin() + windows[wi].start,
                          video.frames.begin() + windows[wi].start + windows[wi].length);
        out[wi] = approximate_rank_pool(win);
    }
    return out;
}

namespace {

// Prefix means V_t = (1/t) sum_{tau<=t} psi(I_tau).
std::vector<Tensor> prefix_means(const std::vector<Tensor>& features) {
    std::vector<Tensor> v;
    v.reserve(features.size());
    Tensor acc(features.front().shape);
    for (std::size_t t = 0; t < features.size(); ++t) {
        require_same_shape(features[t], features.front(), "rank pooling features");
        acc += features[t];
        Tensor m = acc;
        m *= 1.0 / static_cast<double>(t + 1);
        v.push_back(std::move(m));
    }
    return v;
}

} // namespace

double rank_pool_objective(const Tensor& d, const std::vector<Tensor>& features, double lambda) {
    const auto v = prefix_means(features);
    const int T = static_cast<int>(features.size());
    std::vector<double> s(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) s[t] = dot(d, v[t]);

    double hinge = 0.0;
    for (int q = 1; q < T; ++q) {
        for (int t = 0; t < q; ++t) {
            hinge += std::max(0.0, 1.0 - s[static_cast<std::size_t>(q)] + s[static_cast<std::size_t>(t)]);
        }
    }
    const double pair_norm = 2.0 / (static_cast<double>(T) * (T - 1));
    return 0.5 * lambda * dot(d, d) + pair_norm * hinge;
}

double pair_accuracy(const Tensor& d, const std::vector<Tensor>& features) {
    const auto v = prefix_means(features);
    const int T = static_cast<int>(features.size());
    if (T < 2) {
        throw std::invalid_argument("pair_accuracy: need at least 2 features");
    }
    std::vector<double> s(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) s[t] = dot(d, v[t]);

    int correct = 0;
    int total = 0;
    for (int q = 1; q < T; ++q) {
        for (int t = 0; t < q; ++t) {
            ++total;
            if (s[static_cast<std::size_t>(q)] > s[static_cast<std::size_t>(t)]) ++correct;
        }
    }
    return static_cast<double>(correct) / total;
}

RankPoolSolution exact_rank_pool(const std::vector<Tensor>& features, const ExactRankPoolOptions& opts) {
    const int T = static_cast<int>(features.size());
    if (T < 2) {
        throw std::invalid_argument("exact_rank_pool: need at least 2 frames (no pairs otherwise)");
    }
    if (!(opts.lambda > 0.0)) {
        throw std::invalid_argument("exact_rank_pool: lambda must be positive");
    }

    const auto v = prefix_means(features);
    const double pair_norm = 2.0 / (static_cast<double>(T) * (T - 1));

    Tensor d(features.front().shape);
    Tensor best = d;
    double best_obj = rank_pool_objective(d, features, opts.lambda);

    std::vector<double> s(v.size());
    for (int k = 1; k <= opts.iterations; ++k) {
        for (std::size_t t = 0; t < v.size(); ++t) s[t] = dot(d, v[t]);

        // Subgradient: lambda*d + pair_norm * sum over active pairs of (V_t - V_q).
        Tensor g = d;
        g *= opts.lambda;
        for (int q = 1; q < T; ++q) {
            for (int t = 0; t < q; ++t) {
                if (1.0 - s[static_cast<std::size_t>(q)] + s[static_cast<std::size_t>(t)] > 0.0) {
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                        g.data[i] += pair_norm * (v[static_cast<std::size_t>(t)].data[i] -
                                                  v[static_cast<std::size_t>(q)].data[i]);
                    }
                }
            }
        }

        const double step = opts.step_size / std::sqrt(static_cast<double>(k));
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            d.data[i] -= step * g.data[i];
        }

        const double obj = rank_pool_objective(d, features, opts.lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best = d;
        }
    }

    RankPoolSolution sol;
    sol.d = std::move(best);
    sol.objective = best_obj;
    sol.pair_accuracy = pair_accuracy(sol.d, features);
    return sol;
}

std::vector<double> rank_scores(const Tensor& d, const std::vector<Tensor>& features) {
    if (features.empty()) {
        throw std::invalid_argument("rank_scores: empty feature list");
    }
    if (!d.same_shape(features.front())) {
        throw ShapeError("rank_scores: d shape " + shape_str(d.shape) +
                         " does not match features " + shape_str(features.front().shape));
    }
    const auto v = prefix_means(features);
    std::vector<double> s(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) s[t] = dot(d, v[t]);
    return s;
}

} // namespace motionrank
