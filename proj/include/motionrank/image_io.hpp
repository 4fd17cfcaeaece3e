#pragma once

#include <string>

#include "motionrank/rankpool.hpp"

namespace motionrank {

// DIMG: magic "DIMG", little-endian u32 version=1, C, H, W, then C*H*W
// little-endian 32-bit floats in channel-major row-major order. Values pass
// through a float cast, so doubles that are not float-representable are
// quantized once; read(write(x)) is idempotent.
void write_dimg(const DynamicImage& d, const std::string& path);
DynamicImage read_dimg(const std::string& path);

// 8-bit PNG, greyscale (C=1) or RGB (C=3). Pixels are expected in [0,1] and
// are rounded to bytes on write; reads scale back to [0,1].
void write_png(const Tensor& image01, const std::string& path);
Tensor read_png(const std::string& path);

// PNG from raw 8-bit samples, {C,H,W} values 0..255 stored as doubles.
void write_png_bytes(const Tensor& bytes, const std::string& path);

} // namespace motionrank
