#include "motionrank/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "motionrank/errors.hpp"

namespace motionrank {

namespace {

void append_u32le(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f32le(std::string& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    append_u32le(buf, bits);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t get_u32be(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_u32be(std::string& buf, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_png_chunk(std::string& out, const char type[4], const std::string& payload) {
    append_u32be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.append(type, 4);
    out += payload;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + crc_start),
                           static_cast<uInt>(out.size() - crc_start));
    append_u32be(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace

void write_dimg(const DynamicImage& d, const std::string& path) {
    if (d.rank() != 3) {
        throw ShapeError("write_dimg: expected {C,H,W}, got " + shape_str(d.shape));
    }
    std::string buf = "DIMG";
    append_u32le(buf, 1);
    append_u32le(buf, static_cast<std::uint32_t>(d.shape[0]));
    append_u32le(buf, static_cast<std::uint32_t>(d.shape[1]));
    append_u32le(buf, static_cast<std::uint32_t>(d.shape[2]));
    for (double v : d.data) {
        append_f32le(buf, static_cast<float>(v));
    }
    write_file(path, buf);
}

DynamicImage read_dimg(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 20 || raw.compare(0, 4, "DIMG") != 0) {
        throw DecodeError("read_dimg: " + path + " is not a DIMG file");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    const std::uint32_t version = get_u32le(p + 4);
    if (version != 1) {
        throw DecodeError("read_dimg: unsupported version " + std::to_string(version) + " in " + path);
    }
    const int c = static_cast<int>(get_u32le(p + 8));
    const int h = static_cast<int>(get_u32le(p + 12));
    const int w = static_cast<int>(get_u32le(p + 16));
    const std::size_t n = static_cast<std::size_t>(c) * h * w;
    if (raw.size() != 20 + 4 * n) {
        throw DecodeError("read_dimg: payload size mismatch in " + path);
    }
    DynamicImage d({c, h, w});
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = get_u32le(p + 20 + 4 * i);
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        d.data[i] = static_cast<double>(f);
    }
    return d;
}

void write_png_bytes(const Tensor& bytes, const std::string& path) {
    if (bytes.rank() != 3 || (bytes.shape[0] != 1 && bytes.shape[0] != 3)) {
        throw ShapeError("write_png: expected {1,H,W} or {3,H,W}, got " + shape_str(bytes.shape));
    }
    const int c = bytes.shape[0];
    const int h = bytes.shape[1];
    const int w = bytes.shape[2];

    // Interleaved scanlines with filter byte 0.
    std::vector<unsigned char> raw(static_cast<std::size_t>(h) * (1 + static_cast<std::size_t>(w) * c));
    std::size_t pos = 0;
    for (int y = 0; y < h; ++y) {
        raw[pos++] = 0;
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                double v = bytes.at(ch, y, x);
                v = std::clamp(v, 0.0, 255.0);
                raw[pos++] = static_cast<unsigned char>(std::lround(v));
            }
        }
    }

    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_cap);
    if (compress2(comp.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw std::runtime_error("write_png: deflate failed for " + path);
    }
    comp.resize(comp_cap);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    append_u32be(ihdr, static_cast<std::uint32_t>(w));
    append_u32be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);                          // bit depth
    ihdr.push_back(c == 1 ? 0 : 2);             // colour type: grey / truecolour
    ihdr.push_back(0);                          // compression
    ihdr.push_back(0);                          // filter
    ihdr.push_back(0);                          // interlace
    append_png_chunk(out, "IHDR", ihdr);
    append_png_chunk(out, "IDAT", std::string(comp.begin(), comp.end()));
    append_png_chunk(out, "IEND", "");
    write_file(path, out);
}

void write_png(const Tensor& image01, const std::string& path) {
    Tensor bytes = image01;
    for (double& v : bytes.data) {
        v = std::clamp(v, 0.0, 1.0) * 255.0;
    }
    write_png_bytes(bytes, path);
}

Tensor read_png(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 8 || raw.compare(0, 8, "\x89PNG\r\n\x1a\n") != 0) {
        throw DecodeError("read_png: " + path + " is not a PNG file");
    }
    const auto* data = reinterpret_cast<const unsigned char*>(raw.data());
    std::size_t pos = 8;

    int w = 0, h = 0, channels = 0;
    std::string idat;
    bool saw_ihdr = false;

    while (pos + 8 <= raw.size()) {
        const std::uint32_t len = get_u32be(data + pos);
        if (pos + 12 + len > raw.size()) {
            throw DecodeError("read_png: truncated chunk in " + path);
        }
        const std::string type(raw, pos + 4, 4);
        const unsigned char* payload = data + pos + 8;

        if (type == "IHDR") {
            if (len != 13) {
                throw DecodeError("read_png: bad IHDR in " + path);
            }
            w = static_cast<int>(get_u32be(payload));
            h = static_cast<int>(get_u32be(payload + 4));
            const int bit_depth = payload[8];
            const int colour = payload[9];
            const int interlace = payload[12];
            if (bit_depth != 8 || (colour != 0 && colour != 2) || interlace != 0) {
                throw DecodeError("read_png: " + path +
                                  " must be 8-bit greyscale or RGB, non-interlaced");
            }
            channels = (colour == 0) ? 1 : 3;
            saw_ihdr = true;
        } else if (type == "IDAT") {
            idat.append(reinterpret_cast<const char*>(payload), len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || w <= 0 || h <= 0) {
        throw DecodeError("read_png: missing IHDR in " + path);
    }
    if (idat.empty()) {
        throw DecodeError("read_png: missing IDAT in " + path);
    }

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<unsigned char> scan(static_cast<std::size_t>(h) * (stride + 1));
    uLongf dest_len = static_cast<uLongf>(scan.size());
    const int zrc = uncompress(scan.data(), &dest_len,
                               reinterpret_cast<const Bytef*>(idat.data()),
                               static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || dest_len != scan.size()) {
        throw DecodeError("read_png: inflate failed for " + path);
    }

    // Undo per-row filters in place.
    std::vector<unsigned char> prev(stride, 0);
    Tensor img({channels, h, w});
    const int bpp = channels;
    for (int y = 0; y < h; ++y) {
        unsigned char* row = scan.data() + static_cast<std::size_t>(y) * (stride + 1);
        const int filter = row[0];
        unsigned char* cur = row + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = (i >= static_cast<std::size_t>(bpp)) ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = (i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
            int v = cur[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default:
                    throw DecodeError("read_png: unknown filter type " + std::to_string(filter) +
                                      " in " + path);
            }
            cur[i] = static_cast<unsigned char>(v & 0xff);
        }
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                img.at(ch, y, x) = cur[static_cast<std::size_t>(x) * channels + ch] / 255.0;
            }
        }
        std::memcpy(prev.data(), cur, stride);
    }
    return img;
}

} // namespace motionrank
