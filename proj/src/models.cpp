#include "motionrank/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "motionrank/errors.hpp"
#include "motionrank/kernels.hpp"
#include "motionrank/layers.hpp"
#include "motionrank/rng.hpp"

namespace motionrank {

namespace {

Tensor random_kernels(Rng& rng, int out_c, int in_c, int k) {
    Tensor t({out_c, in_c, k, k});
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_c) * k * k);
    for (double& v : t.data) v = scale * rng.normal();
    return t;
}

Tensor random_dense(Rng& rng, int out_dim, int in_dim) {
    Tensor t({out_dim, in_dim});
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : t.data) v = scale * rng.normal();
    return t;
}

std::string enc_name(int i) { return "enc" + std::to_string(i); }
std::string dec_name(int i) { return "dec" + std::to_string(i); }
std::string cls_name(int i) { return "conv" + std::to_string(i); }

// Channel widths through the encoder: in_channels, then each stage map.
std::vector<int> gen_widths(const GeneratorConfig& c) {
    std::vector<int> w;
    w.push_back(c.in_channels);
    for (int f : c.stage_feature_maps) w.push_back(f);
    return w;
}

// Spatial extents entering each encoder stage for a given input, plus the
// bottleneck extent at the end. Validates divisibility as it goes.
std::vector<std::pair<int, int>> gen_spatial_chain(const GeneratorConfig& c, int h, int w) {
    std::vector<std::pair<int, int>> chain;
    chain.emplace_back(h, w);
    for (std::size_t i = 0; i < c.stage_feature_maps.size(); ++i) {
        const int ho = conv_out_extent(chain.back().first, c.kernel, c.stride, c.pad);
        const int wo = conv_out_extent(chain.back().second, c.kernel, c.stride, c.pad);
        // Mirror check: the transposed conv must be able to reproduce the
        // stage input extent with out_adjust in [0, stride).
        const int base_h = conv_transpose_out_extent(ho, c.kernel, c.stride, c.pad, 0);
        const int base_w = conv_transpose_out_extent(wo, c.kernel, c.stride, c.pad, 0);
        const int adj_h = chain.back().first - base_h;
        const int adj_w = chain.back().second - base_w;
        if (adj_h < 0 || adj_h >= c.stride || adj_w < 0 || adj_w >= c.stride || adj_h != adj_w) {
            throw std::invalid_argument(
                "generator: stage " + std::to_string(i) + " input " +
                std::to_string(chain.back().first) + "x" + std::to_string(chain.back().second) +
                " is not invertible by the decoder mirror");
        }
        chain.emplace_back(ho, wo);
    }
    return chain;
}

void check_divisible(const GeneratorConfig& c, int h, int w) {
    const int div = 1 << static_cast<int>(c.stage_feature_maps.size());
    if (h % div != 0 || w % div != 0) {
        throw std::invalid_argument("generator: spatial dims " + std::to_string(h) + "x" +
                                    std::to_string(w) + " must be divisible by " + std::to_string(div));
    }
}

} // namespace

void validate_generator_config(const GeneratorConfig& config) {
    if (config.stage_feature_maps.empty()) {
        throw std::invalid_argument("generator: need at least one stage");
    }
    if (config.stride != 2) {
        throw std::invalid_argument("generator: only stride 2 stages are supported");
    }
    if (config.height > 0 && config.width > 0) {
        check_divisible(config, config.height, config.width);
        gen_spatial_chain(config, config.height, config.width);
    }
}

ModelParams init_generator(const GeneratorConfig& config, std::uint64_t seed) {
    validate_generator_config(config);
    ModelParams p;
    p.kind = ModelParams::Kind::Generator;
    p.gen = config;

    Rng rng(seed);
    const auto w = gen_widths(config);
    const int s = static_cast<int>(config.stage_feature_maps.size());
    for (int i = 0; i < s; ++i) {
        p.tensors.emplace(enc_name(i) + ".kernels", random_kernels(rng, w[i + 1], w[i], config.kernel));
        p.tensors.emplace(enc_name(i) + ".bias", Tensor({w[i + 1]}));
    }
    for (int j = 0; j < s; ++j) {
        const int e = s - 1 - j; // encoder stage this decoder stage undoes
        p.tensors.emplace(dec_name(j) + ".kernels", random_kernels(rng, w[e + 1], w[e], config.kernel));
        p.tensors.emplace(dec_name(j) + ".bias", Tensor({w[e]}));
    }
    return p;
}

ModelParams init_classifier(const ClassifierConfig& config, std::uint64_t seed) {
    if (config.stage_feature_maps.empty()) {
        throw std::invalid_argument("classifier: need at least one stage");
    }
    if (config.num_classes < 2) {
        throw std::invalid_argument("classifier: need at least 2 classes");
    }
    ModelParams p;
    p.kind = ModelParams::Kind::Classifier;
    p.cls = config;

    Rng rng(seed);
    int in_c = config.in_channels;
    for (std::size_t i = 0; i < config.stage_feature_maps.size(); ++i) {
        const int out_c = config.stage_feature_maps[i];
        p.tensors.emplace(cls_name(static_cast<int>(i)) + ".kernels",
                          random_kernels(rng, out_c, in_c, config.kernel));
        p.tensors.emplace(cls_name(static_cast<int>(i)) + ".bias", Tensor({out_c}));
        in_c = out_c;
    }
    p.tensors.emplace("head.W", random_dense(rng, config.num_classes, in_c));
    p.tensors.emplace("head.b", Tensor({config.num_classes}));
    return p;
}

namespace {

void check_generator_input(const ModelParams& params, const DynamicImage& input) {
    if (params.kind != ModelParams::Kind::Generator) {
        throw std::invalid_argument("generator_forward: params are not a generator");
    }
    if (input.rank() != 3 || input.shape[0] != params.gen.in_channels) {
        throw ShapeError("generator: input must be {" + std::to_string(params.gen.in_channels) +
                         ",H,W}, got " + shape_str(input.shape));
    }
    if (params.gen.height > 0 &&
        (input.shape[1] != params.gen.height || input.shape[2] != params.gen.width)) {
        throw ShapeError("generator: configured for " + std::to_string(params.gen.height) + "x" +
                         std::to_string(params.gen.width) + ", got " + shape_str(input.shape));
    }
    check_divisible(params.gen, input.shape[1], input.shape[2]);
}

} // namespace

DynamicImage generator_forward_cached(const ModelParams& params, const DynamicImage& input,
                                      LayerTape& tape) {
    check_generator_input(params, input);
    const GeneratorConfig& c = params.gen;
    const int s = static_cast<int>(c.stage_feature_maps.size());
    const auto chain = gen_spatial_chain(c, input.shape[1], input.shape[2]);

    tape.inputs.clear();
    tape.pre_acts.clear();

    Tensor x = input;
    for (int i = 0; i < s; ++i) {
        tape.inputs.push_back(x);
        Tensor pre = conv2d_forward(x, params.tensors.at(enc_name(i) + ".kernels"),
                                    params.tensors.at(enc_name(i) + ".bias"), c.stride, c.pad);
        tape.pre_acts.push_back(pre);
        x = activation_forward(pre, Activation::LeakyRelu, c.leaky_slope);
    }
    for (int j = 0; j < s; ++j) {
        const int e = s - 1 - j;
        const auto target = chain[static_cast<std::size_t>(e)];
        const int adj = target.first -
                        conv_transpose_out_extent(x.shape[1], c.kernel, c.stride, c.pad, 0);
        tape.inputs.push_back(x);
        Tensor pre = conv2d_transpose_forward(x, params.tensors.at(dec_name(j) + ".kernels"),
                                              params.tensors.at(dec_name(j) + ".bias"),
                                              c.stride, c.pad, adj);
        tape.pre_acts.push_back(pre);
        x = (j < s - 1) ? activation_forward(pre, Activation::Relu) : pre;
    }
    return x;
}

DynamicImage generator_forward(const ModelParams& params, const DynamicImage& input) {
    LayerTape tape;
    return generator_forward_cached(params, input, tape);
}

BackpropResult generator_backward(const ModelParams& params, const LayerTape& tape,
                                  const Tensor& upstream) {
    const GeneratorConfig& c = params.gen;
    const int s = static_cast<int>(c.stage_feature_maps.size());
    if (static_cast<int>(tape.inputs.size()) != 2 * s) {
        throw std::invalid_argument("generator_backward: tape does not match config");
    }

    BackpropResult out;
    Tensor up = upstream;
    for (int l = 2 * s - 1; l >= 0; --l) {
        const bool is_dec = l >= s;
        const std::string name = is_dec ? dec_name(l - s) : enc_name(l);
        const Tensor& pre = tape.pre_acts[static_cast<std::size_t>(l)];
        const Tensor& layer_in = tape.inputs[static_cast<std::size_t>(l)];

        if (is_dec) {
            if (l - s < s - 1) { // hidden decoder stages are ReLU; final is linear
                up = activation_backward(pre, Activation::Relu, up);
            }
            const int adj = pre.shape[1] -
                            conv_transpose_out_extent(layer_in.shape[1], c.kernel, c.stride, c.pad, 0);
            LayerGrad g = conv2d_transpose_backward(layer_in, params.tensors.at(name + ".kernels"),
                                                    c.stride, c.pad, adj, up);
            out.param_grads.emplace(name + ".kernels", std::move(g.param_grads.at("kernels")));
            out.param_grads.emplace(name + ".bias", std::move(g.param_grads.at("bias")));
            up = std::move(g.input_grad);
        } else {
            up = activation_backward(pre, Activation::LeakyRelu, up, c.leaky_slope);
            LayerGrad g = conv2d_backward(layer_in, params.tensors.at(name + ".kernels"),
                                          c.stride, c.pad, up);
            out.param_grads.emplace(name + ".kernels", std::move(g.param_grads.at("kernels")));
            out.param_grads.emplace(name + ".bias", std::move(g.param_grads.at("bias")));
            up = std::move(g.input_grad);
        }
    }
    out.input_grad = std::move(up);
    return out;
}

namespace {

void check_classifier_input(const ModelParams& params, const Tensor& image) {
    if (params.kind != ModelParams::Kind::Classifier) {
        throw std::invalid_argument("classifier: params are not a classifier");
    }
    if (image.rank() != 3 || image.shape[0] != params.cls.in_channels) {
        throw ShapeError("classifier: input must be {" + std::to_string(params.cls.in_channels) +
                         ",H,W}, got " + shape_str(image.shape));
    }
    if (params.cls.height > 0 &&
        (image.shape[1] != params.cls.height || image.shape[2] != params.cls.width)) {
        throw ShapeError("classifier: configured for " + std::to_string(params.cls.height) + "x" +
                         std::to_string(params.cls.width) + ", got " + shape_str(image.shape));
    }
}

} // namespace

Tensor classifier_logits_cached(const ModelParams& params, const Tensor& image, LayerTape& tape) {
    check_classifier_input(params, image);
    const ClassifierConfig& c = params.cls;

    tape.inputs.clear();
    tape.pre_acts.clear();

    Tensor x = image;
    for (std::size_t i = 0; i < c.stage_feature_maps.size(); ++i) {
        tape.inputs.push_back(x);
        Tensor pre = conv2d_forward(x, params.tensors.at(cls_name(static_cast<int>(i)) + ".kernels"),
                                    params.tensors.at(cls_name(static_cast<int>(i)) + ".bias"),
                                    c.stride, c.pad);
        tape.pre_acts.push_back(pre);
        x = activation_forward(pre, Activation::Relu);
    }
    tape.pooled_shape = x.shape;
    tape.pooled = global_avg_pool_forward(x);
    return dense_forward(tape.pooled, params.tensors.at("head.W"), params.tensors.at("head.b"));
}

Tensor classifier_logits(const ModelParams& params, const Tensor& image) {
    LayerTape tape;
    return classifier_logits_cached(params, image, tape);
}

ScoreVector classifier_forward(const ModelParams& params, const Tensor& image) {
    return softmax(classifier_logits(params, image));
}

BackpropResult classifier_backward(const ModelParams& params, const LayerTape& tape,
                                   const Tensor& logits_grad) {
    const ClassifierConfig& c = params.cls;
    BackpropResult out;

    LayerGrad dg = dense_backward(tape.pooled, params.tensors.at("head.W"), logits_grad);
    out.param_grads.emplace("head.W", std::move(dg.param_grads.at("W")));
    out.param_grads.emplace("head.b", std::move(dg.param_grads.at("b")));

    Tensor up = global_avg_pool_backward(tape.pooled_shape, dg.input_grad);
    for (int i = static_cast<int>(c.stage_feature_maps.size()) - 1; i >= 0; --i) {
        up = activation_backward(tape.pre_acts[static_cast<std::size_t>(i)], Activation::Relu, up);
        LayerGrad g = conv2d_backward(tape.inputs[static_cast<std::size_t>(i)],
                                      params.tensors.at(cls_name(i) + ".kernels"), c.stride, c.pad, up);
        out.param_grads.emplace(cls_name(i) + ".kernels", std::move(g.param_grads.at("kernels")));
        out.param_grads.emplace(cls_name(i) + ".bias", std::move(g.param_grads.at("bias")));
        up = std::move(g.input_grad);
    }
    out.input_grad = std::move(up);
    return out;
}

Tensor standardize_dynamic_image(const DynamicImage& d) {
    const double mu = mean(d);
    double var = 0.0;
    for (double v : d.data) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d.numel());
    const double sigma = std::max(std::sqrt(var), 1e-6);

    Tensor y = d;
    for (double& v : y.data) v = (v - mu) / sigma;
    return y;
}

Tensor standardize_backward(const DynamicImage& original, const Tensor& upstream) {
    require_same_shape(original, upstream, "standardize_backward");
    const double n = static_cast<double>(original.numel());
    const double mu = mean(original);
    double var = 0.0;
    for (double v : original.data) var += (v - mu) * (v - mu);
    var /= n;
    const double sd = std::sqrt(var);

    const double g_mean = mean(upstream);
    Tensor grad(original.shape);
    if (sd > 1e-6) {
        // y = (x - mu)/sd; dL/dx = (g - mean(g) - y*mean(g.y)) / sd
        double gy_mean = 0.0;
        for (std::size_t i = 0; i < original.data.size(); ++i) {
            gy_mean += upstream.data[i] * (original.data[i] - mu) / sd;
        }
        gy_mean /= n;
        for (std::size_t i = 0; i < original.data.size(); ++i) {
            const double y = (original.data[i] - mu) / sd;
            grad.data[i] = (upstream.data[i] - g_mean - y * gy_mean) / sd;
        }
    } else {
        // Clamped denominator is a constant; only the mean subtraction remains.
        for (std::size_t i = 0; i < original.data.size(); ++i) {
            grad.data[i] = (upstream.data[i] - g_mean) / 1e-6;
        }
    }
    return grad;
}

namespace {

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    const unsigned char* p;
    const unsigned char* end;

    bool eof() const { return p >= end; }
    void need(std::size_t n, const char* what) {
        if (static_cast<std::size_t>(end - p) < n) {
            throw DecodeError(std::string("checkpoint: truncated ") + what);
        }
    }
    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1, "u8");
        return *p++;
    }
    double f64() {
        need(8, "f64");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
    std::string bytes(std::size_t n) {
        need(n, "string");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

} // namespace

std::vector<unsigned char> serialize_params(const ModelParams& params) {
    std::string buf = "MRNK";
    put_u32(buf, 1);
    for (const auto& [name, t] : params.tensors) {
        put_u16(buf, static_cast<std::uint16_t>(name.size()));
        buf += name;
        buf.push_back(static_cast<char>(t.rank()));
        for (int d : t.shape) put_u32(buf, static_cast<std::uint32_t>(d));
        for (double v : t.data) put_f64(buf, v);
    }
    return {buf.begin(), buf.end()};
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    const auto bytes = serialize_params(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("save_checkpoint: write failed for " + path);
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    }
    const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r{reinterpret_cast<const unsigned char*>(raw.data()),
                 reinterpret_cast<const unsigned char*>(raw.data()) + raw.size()};

    if (r.bytes(4) != "MRNK") {
        throw DecodeError("checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = r.u32();
    if (version != 1) {
        throw DecodeError("checkpoint: unsupported version " + std::to_string(version));
    }

    ModelParams p;
    while (!r.eof()) {
        const std::string name = r.bytes(r.u16());
        const int rank = r.u8();
        std::vector<int> shape(static_cast<std::size_t>(rank));
        for (int& d : shape) d = static_cast<int>(r.u32());
        Tensor t(shape);
        for (double& v : t.data) v = r.f64();
        if (!p.tensors.emplace(name, std::move(t)).second) {
            throw DecodeError("checkpoint: duplicate tensor '" + name + "'");
        }
    }

    // Reconstruct the config from the tensor inventory; spatial extent is
    // not stored, so configs come back shape-agnostic (height = width = 0).
    if (p.tensors.count("head.W")) {
        p.kind = ModelParams::Kind::Classifier;
        ClassifierConfig c;
        c.height = c.width = 0;
        c.stage_feature_maps.clear();
        for (int i = 0; p.tensors.count(cls_name(i) + ".kernels"); ++i) {
            const Tensor& k = p.tensors.at(cls_name(i) + ".kernels");
            if (i == 0) {
                c.in_channels = k.shape[1];
                c.kernel = k.shape[2];
            }
            c.stage_feature_maps.push_back(k.shape[0]);
        }
        if (c.stage_feature_maps.empty()) {
            throw DecodeError("checkpoint: classifier has no conv stages");
        }
        c.num_classes = p.tensors.at("head.W").shape[0];
        p.cls = c;
    } else if (p.tensors.count("enc0.kernels")) {
        p.kind = ModelParams::Kind::Generator;
        GeneratorConfig c;
        c.height = c.width = 0;
        c.stage_feature_maps.clear();
        for (int i = 0; p.tensors.count(enc_name(i) + ".kernels"); ++i) {
            const Tensor& k = p.tensors.at(enc_name(i) + ".kernels");
            if (i == 0) {
                c.in_channels = k.shape[1];
                c.kernel = k.shape[2];
            }
            c.stage_feature_maps.push_back(k.shape[0]);
        }
        p.gen = c;
    } else {
        throw DecodeError("checkpoint: unrecognized parameter inventory in " + path);
    }
    return p;
}

} // namespace motionrank
