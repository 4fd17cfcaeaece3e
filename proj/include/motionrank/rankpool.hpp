#pragma once

#include <vector>

#include "motionrank/tensor.hpp"

namespace motionrank {

// A frame is a {C,H,W} tensor with pixels in [0,1]; a dynamic image shares
// the frame shape but is unbounded.
using Frame = Tensor;
using DynamicImage = Tensor;

struct FrameSequence {
    std::vector<Frame> frames;
    int label = -1;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

// Throws if pixels leave [0,1] or the shape is not {C,H,W} with C in {1,3}.
void validate_frame(const Frame& f, const char* what);
// Length >= 1 and uniform frame shapes.
void validate_sequence(const FrameSequence& seq, const char* what);

struct CoefficientVector {
    int T = 0;
    std::vector<double> alpha;
};

struct RankPoolSolution {
    Tensor d;
    double objective = 0.0;
    double pair_accuracy = 0.0;
};

// H_0 = 0, H_t = sum_{i=1..t} 1/i.
double harmonic(int t);

// alpha_t = 2(T - t + 1) - (T+1)(H_T - H_{t-1}); the weights sum to zero.
CoefficientVector coefficients(int T);

// d* = sum_t alpha_t I_t over a window of T frames.
DynamicImage approximate_rank_pool(const FrameSequence& window);

// Sliding windows at the given stride; a trailing remainder shorter than T
// gets its own partial window, and a video shorter than T yields a single
// dynamic image over all available frames.
std::vector<DynamicImage> dynamic_image_sequence(const FrameSequence& video, int T, int stride);

// Window start/length bookkeeping behind dynamic_image_sequence, exposed so
// dataset assembly can pair consecutive windows.
struct Window {
    int start = 0;
    int length = 0;
};
std::vector<Window> sliding_windows(int num_frames, int T, int stride);

struct ExactRankPoolOptions {
    double lambda = 0.01;
    int iterations = 2000;
    double step_size = 0.1; // step k uses step_size / sqrt(k)
};

// Subgradient descent on the RankSVM objective
//   E(d) = lambda/2 ||d||^2 + 2/(T(T-1)) sum_{q>t} max{0, 1 - S(q|d) + S(t|d)}
// with S(t|d) = <d, V_t> and V_t the running feature mean. Starts from d = 0
// and returns the best iterate; serves as the correctness oracle for
// approximate_rank_pool.
RankPoolSolution exact_rank_pool(const std::vector<Tensor>& features, const ExactRankPoolOptions& opts = {});

// Objective E(d) for a candidate d; shared by the solver and tests.
double rank_pool_objective(const Tensor& d, const std::vector<Tensor>& features, double lambda);

// Fraction of pairs q > t with S(q|d) strictly greater than S(t|d).
double pair_accuracy(const Tensor& d, const std::vector<Tensor>& features);

// Scores <d, V_t> for each prefix mean V_t.
std::vector<double> rank_scores(const Tensor& d, const std::vector<Tensor>& features);

} // namespace motionrank
