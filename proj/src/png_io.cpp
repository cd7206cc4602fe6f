#include "srtk/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace srtk {
namespace {

constexpr uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t read_be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void write_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data, size_t len) {
    write_be32(out, static_cast<uint32_t>(len));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + start, static_cast<uInt>(4 + len));
    write_be32(out, crc);
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

std::vector<uint8_t> zlib_inflate(const std::vector<uint8_t>& in, size_t expected) {
    std::vector<uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) throw std::runtime_error("png: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw std::runtime_error("png: corrupt or truncated image data");
    return out;
}

std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& in) {
    uLongf bound = compressBound(static_cast<uLong>(in.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

}  // namespace

Tensor load_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw std::runtime_error("png: bad signature in " + path);

    uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_ihdr = false, seen_iend = false;
    while (pos + 8 <= bytes.size() && !seen_iend) {
        uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk in " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            width = read_be32(data);
            height = read_be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || width == 0 || height == 0) throw std::runtime_error("png: missing IHDR in " + path);
    if (bit_depth != 8) throw std::runtime_error("png: only 8-bit images supported: " + path);
    if (interlace != 0) throw std::runtime_error("png: interlaced images not supported: " + path);
    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw std::runtime_error("png: unsupported color type in " + path);
    }

    size_t stride = size_t(width) * channels;
    std::vector<uint8_t> raw = zlib_inflate(idat, (stride + 1) * height);

    // Undo per-row filters in place.
    std::vector<uint8_t> img(stride * height);
    for (uint32_t y = 0; y < height; ++y) {
        uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &img[stride * y];
        const uint8_t* up = y ? &img[stride * (y - 1)] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= size_t(channels) ? dst[x - channels] : 0;
            int b = up ? up[x] : 0;
            int c = (up && x >= size_t(channels)) ? up[x - channels] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("png: bad filter byte in " + path);
            }
            dst[x] = uint8_t(v);
        }
    }

    Tensor out({1, 3, int(height), int(width)});
    for (uint32_t y = 0; y < height; ++y) {
        for (uint32_t x = 0; x < width; ++x) {
            const uint8_t* px = &img[stride * y + size_t(x) * channels];
            float r, g, b;
            if (channels <= 2) {
                r = g = b = px[0] / 255.0f;
            } else {
                r = px[0] / 255.0f;
                g = px[1] / 255.0f;
                b = px[2] / 255.0f;
            }
            out.at4(0, 0, int(y), int(x)) = r;
            out.at4(0, 1, int(y), int(x)) = g;
            out.at4(0, 2, int(y), int(x)) = b;
        }
    }
    return out;
}

void save_png(const std::string& path, const Tensor& img) {
    int h, w;
    const Tensor* t = &img;
    if (img.ndim() == 4 && img.dim(0) == 1 && img.dim(1) == 3) {
        h = img.dim(2);
        w = img.dim(3);
    } else if (img.ndim() == 3 && img.dim(0) == 3) {
        h = img.dim(1);
        w = img.dim(2);
    } else {
        throw std::invalid_argument("save_png: expected [1,3,H,W] or [3,H,W], got " + img.shape_str());
    }
    const int64_t plane = int64_t(h) * w;
    const float* base = t->data();

    size_t stride = size_t(w) * 3;
    std::vector<uint8_t> raw((stride + 1) * size_t(h));
    for (int y = 0; y < h; ++y) {
        raw[(stride + 1) * size_t(y)] = 0;  // filter: none
        uint8_t* row = &raw[(stride + 1) * size_t(y) + 1];
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                float v = base[plane * c + int64_t(y) * w + x];
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                row[size_t(x) * 3 + c] = uint8_t(std::lround(v * 255.0f));
            }
        }
    }
    std::vector<uint8_t> compressed = zlib_deflate(raw);

    std::vector<uint8_t> out(kSignature, kSignature + 8);
    uint8_t ihdr[13];
    ihdr[0] = uint8_t(uint32_t(w) >> 24); ihdr[1] = uint8_t(uint32_t(w) >> 16);
    ihdr[2] = uint8_t(uint32_t(w) >> 8);  ihdr[3] = uint8_t(w);
    ihdr[4] = uint8_t(uint32_t(h) >> 24); ihdr[5] = uint8_t(uint32_t(h) >> 16);
    ihdr[6] = uint8_t(uint32_t(h) >> 8);  ihdr[7] = uint8_t(h);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // RGB
    ihdr[10] = 0; ihdr[11] = 0; ihdr[12] = 0;
    append_chunk(out, "IHDR", ihdr, 13);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("png: cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("png: write failed for " + path);
}

}  // namespace srtk
