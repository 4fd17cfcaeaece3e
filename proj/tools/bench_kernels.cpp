// Throughput comparison between the OpenMP conv kernels and the serial
// reference implementations, on the shapes the generator actually runs.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "motionrank/kernels.hpp"
#include "motionrank/rng.hpp"
#include "motionrank/tensor.hpp"

using namespace motionrank;

namespace {

Tensor rand_tensor(Rng& rng, const std::vector<int>& shape) {
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-26s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

} // namespace

int main(int argc, char** argv) {
    int threads = 0;
    int reps = 20;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--jobs" && i + 1 < argc) {
            threads = std::atoi(argv[++i]);
        } else if (a == "--reps" && i + 1 < argc) {
            reps = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: bench_kernels [--jobs N] [--reps N]\n");
            return 1;
        }
    }
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
    std::printf("openmp threads: %d, reps: %d\n", omp_get_max_threads(), reps);
#else
    std::printf("built without openmp; both columns run serial code paths\n");
#endif

    Rng rng(7);

    // Encoder-sized convolution: 16 -> 32 maps at 16x16, kernel 5 stride 2.
    const Tensor conv_in = rand_tensor(rng, {16, 16, 16});
    const Tensor conv_k = rand_tensor(rng, {32, 16, 5, 5});
    const Tensor conv_b = rand_tensor(rng, {32});
    const Tensor conv_up = rand_tensor(rng, {32, 8, 8});

    report("conv2d_forward",
           time_ms([&] { serial::conv2d_forward(conv_in, conv_k, conv_b, 2, 2); }, reps),
           time_ms([&] { conv2d_forward(conv_in, conv_k, conv_b, 2, 2); }, reps));
    report("conv2d_backward",
           time_ms([&] { serial::conv2d_backward(conv_in, conv_k, 2, 2, conv_up); }, reps),
           time_ms([&] { conv2d_backward(conv_in, conv_k, 2, 2, conv_up); }, reps));

    // Decoder-sized transposed convolution: 32 -> 16 maps, 8x8 -> 16x16.
    const Tensor tconv_in = rand_tensor(rng, {32, 8, 8});
    const Tensor tconv_k = rand_tensor(rng, {32, 16, 5, 5});
    const Tensor tconv_b = rand_tensor(rng, {16});
    const Tensor tconv_up = rand_tensor(rng, {16, 16, 16});

    report("conv2d_transpose_forward",
           time_ms([&] { serial::conv2d_transpose_forward(tconv_in, tconv_k, tconv_b, 2, 2, 1); }, reps),
           time_ms([&] { conv2d_transpose_forward(tconv_in, tconv_k, tconv_b, 2, 2, 1); }, reps));
    report("conv2d_transpose_backward",
           time_ms([&] { serial::conv2d_transpose_backward(tconv_in, tconv_k, 2, 2, 1, tconv_up); }, reps),
           time_ms([&] { conv2d_transpose_backward(tconv_in, tconv_k, 2, 2, 1, tconv_up); }, reps));

    // Larger single-image workload: 3 -> 64 maps at 64x64.
    const Tensor big_in = rand_tensor(rng, {3, 64, 64});
    const Tensor big_k = rand_tensor(rng, {64, 3, 5, 5});
    const Tensor big_b = rand_tensor(rng, {64});
    report("conv2d_forward (64x64)",
           time_ms([&] { serial::conv2d_forward(big_in, big_k, big_b, 2, 2); }, reps),
           time_ms([&] { conv2d_forward(big_in, big_k, big_b, 2, 2); }, reps));

    return 0;
}
