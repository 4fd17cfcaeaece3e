#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionrank/rankpool.hpp"
#include "motionrank/tensor.hpp"

namespace motionrank {

// Per-class probability vector.
using ScoreVector = Tensor;

// Autoencoder that maps a dynamic image to the predicted next one. Encoder
// stages are conv(kernel, stride, pad) + leaky-ReLU; the decoder mirrors
// them with transposed convs + ReLU and a linear final stage, so the output
// shape equals the input shape. Spatial dims must be divisible by
// stride^num_stages. height/width of 0 mean "any divisible input" (used by
// checkpoints, which carry no spatial extent).
struct GeneratorConfig {
    int in_channels = 1;
    int height = 32;
    int width = 32;
    std::vector<int> stage_feature_maps = {16, 32};
    int kernel = 5;
    int stride = 2;
    int pad = 2;
    double leaky_slope = 0.2;
};

struct ClassifierConfig {
    int in_channels = 1;
    int height = 32;
    int width = 32;
    std::vector<int> stage_feature_maps = {8, 16};
    int num_classes = 6;
    int kernel = 5;
    int stride = 2;
    int pad = 2;
};

struct ModelParams {
    enum class Kind { Generator, Classifier };
    Kind kind = Kind::Generator;
    GeneratorConfig gen;
    ClassifierConfig cls;
    TensorMap tensors;
};

// Throws std::invalid_argument when spatial dims don't survive the
// encoder/decoder mirror.
void validate_generator_config(const GeneratorConfig& config);

// Fan-in-scaled zero-mean kernels, zero biases; deterministic in the seed.
ModelParams init_generator(const GeneratorConfig& config, std::uint64_t seed);
ModelParams init_classifier(const ClassifierConfig& config, std::uint64_t seed);

// Activations cached by a forward pass, consumed by the matching backward.
struct LayerTape {
    std::vector<Tensor> inputs;    // input to each conv/transpose-conv layer
    std::vector<Tensor> pre_acts;  // pre-activation outputs
    std::vector<int> pooled_shape; // classifier only: shape entering GAP
    Tensor pooled;                 // classifier only: GAP output
};

// Parameter gradients plus the gradient w.r.t. the network input.
struct BackpropResult {
    TensorMap param_grads;
    Tensor input_grad;
};

DynamicImage generator_forward(const ModelParams& params, const DynamicImage& input);
DynamicImage generator_forward_cached(const ModelParams& params, const DynamicImage& input,
                                      LayerTape& tape);
BackpropResult generator_backward(const ModelParams& params, const LayerTape& tape,
                                  const Tensor& upstream);

// Probability vector over classes (softmax of the logits).
ScoreVector classifier_forward(const ModelParams& params, const Tensor& image);
Tensor classifier_logits(const ModelParams& params, const Tensor& image);
Tensor classifier_logits_cached(const ModelParams& params, const Tensor& image, LayerTape& tape);
BackpropResult classifier_backward(const ModelParams& params, const LayerTape& tape,
                                   const Tensor& logits_grad);

// (D - mean(D)) / max(std(D), 1e-6), per image.
Tensor standardize_dynamic_image(const DynamicImage& d);
// Gradient of the standardization at the original input.
Tensor standardize_backward(const DynamicImage& original, const Tensor& upstream);

// Checkpoint format: magic "MRNK", u32 version, then per tensor u16 name
// length + UTF-8 name, u8 rank, u32 dims, little-endian f64 data, until EOF.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);
std::vector<unsigned char> serialize_params(const ModelParams& params);

} // namespace motionrank
