// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <zlib.h>

namespace avrfn {

namespace {

std::vector<unsigned char> read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::io, "cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    require(f.good(), ErrorCode::io, "short write to '" + path + "'");
}

// ---- PGM (binary P5) ----

bool is_pgm(const std::vector<unsigned char>& b)
{
    return b.size() >= 2 && b[0] == 'P' && b[1] == '5';
}

int pgm_token(const std::vector<unsigned char>& b, std::size_t& pos)
{
    // skips whitespace and '#' comments, then reads one decimal token
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
        } else {
            break;
        }
    }
    require(pos < b.size() && std::isdigit(b[pos]), ErrorCode::format, "malformed PGM header");
    int v = 0;
    while (pos < b.size() && std::isdigit(b[pos]))
        v = v * 10 + (b[pos++] - '0');
    return v;
}

GrayImage load_pgm(const std::vector<unsigned char>& b)
{
    std::size_t pos = 2;
    const int w = pgm_token(b, pos);
    const int h = pgm_token(b, pos);
    const int maxval = pgm_token(b, pos);
    require(w > 0 && h > 0, ErrorCode::format, "PGM: bad dimensions");
    require(maxval == 255 || maxval == 65535, ErrorCode::format,
            "PGM: unsupported maxval " + std::to_string(maxval) + " (need 255 or 65535)");
    require(pos < b.size() && std::isspace(b[pos]), ErrorCode::format, "PGM: bad header end");
    ++pos;

    GrayImage img = make_image(w, h, double(maxval));
    const std::size_t count = std::size_t(w) * h;
    if (maxval == 255) {
        require(b.size() - pos >= count, ErrorCode::format, "PGM: truncated pixel data");
        for (std::size_t i = 0; i < count; ++i)
            img.pixels[i] = double(b[pos + i]);
    } else {
        require(b.size() - pos >= 2 * count, ErrorCode::format, "PGM: truncated pixel data");
        for (std::size_t i = 0; i < count; ++i)
            img.pixels[i] = double((unsigned(b[pos + 2 * i]) << 8) | b[pos + 2 * i + 1]);
    }
    return img;
}

void save_pgm(const GrayImage& img, const std::string& path)
{
    const int maxval = img.max_value > 255.5 ? 65535 : 255;
    std::vector<unsigned char> out;
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n" + std::to_string(maxval) + "\n";
    out.insert(out.end(), header.begin(), header.end());
    for (double v : img.pixels) {
        long q = std::lround(std::clamp(v, 0.0, double(maxval)));
        if (maxval == 255) {
            out.push_back((unsigned char)q);
        } else {
            out.push_back((unsigned char)(q >> 8));
            out.push_back((unsigned char)(q & 0xff));
        }
    }
    write_file(path, out);
}

// ---- PNG ----

const unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

bool is_png(const std::vector<unsigned char>& b)
{
    return b.size() >= 8 && std::memcmp(b.data(), kPngSig, 8) == 0;
}

uint32_t be32(const unsigned char* p)
{
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void put_be32(std::vector<unsigned char>& out, uint32_t v)
{
    out.push_back((unsigned char)(v >> 24));
    out.push_back((unsigned char)(v >> 16));
    out.push_back((unsigned char)(v >> 8));
    out.push_back((unsigned char)v);
}

int paeth(int a, int b, int c)
{
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc)
        return a;
    return pb <= pc ? b : c;
}

GrayImage load_png(const std::vector<unsigned char>& b, const std::string& path)
{
    std::size_t pos = 8;
    int w = 0, h = 0, depth = 0, color = 0, interlace = 0;
    std::vector<unsigned char> idat;
    bool seen_ihdr = false, seen_iend = false;

    while (pos + 8 <= b.size() && !seen_iend) {
        const uint32_t len = be32(&b[pos]);
        require(pos + 12 + len <= b.size(), ErrorCode::format, path + ": truncated PNG chunk");
        const char* type = reinterpret_cast<const char*>(&b[pos + 4]);
        const unsigned char* data = &b[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, ErrorCode::format, path + ": bad IHDR");
            w = int(be32(data));
            h = int(be32(data + 4));
            depth = data[8];
            color = data[9];
            interlace = data[12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    require(seen_ihdr && !idat.empty(), ErrorCode::format, path + ": missing PNG chunks");
    require(w > 0 && h > 0, ErrorCode::format, path + ": bad dimensions");
    require(depth == 8 || depth == 16, ErrorCode::format,
            path + ": unsupported bit depth " + std::to_string(depth));
    require(interlace == 0, ErrorCode::format, path + ": interlaced PNG not supported");
    int channels;
    switch (color) {
    case 0: channels = 1; break; // gray
    case 2: channels = 3; break; // rgb
    case 4: channels = 2; break; // gray+alpha
    case 6: channels = 4; break; // rgba
    default:
        fail(ErrorCode::format, path + ": unsupported color type " + std::to_string(color));
    }

    const std::size_t bpp = std::size_t(channels) * depth / 8; // bytes per pixel
    const std::size_t stride = std::size_t(w) * bpp;
    std::vector<unsigned char> raw((stride + 1) * h);
    {
        z_stream zs{};
        require(inflateInit(&zs) == Z_OK, ErrorCode::internal, "inflateInit failed");
        zs.next_in = idat.data();
        zs.avail_in = uInt(idat.size());
        zs.next_out = raw.data();
        zs.avail_out = uInt(raw.size());
        int rc = inflate(&zs, Z_FINISH);
        inflateEnd(&zs);
        require(rc == Z_STREAM_END && zs.avail_out == 0, ErrorCode::format,
                path + ": PNG pixel data does not decompress to the expected size");
    }

    // undo per-row filters in place
    std::vector<unsigned char> prev(stride, 0);
    std::vector<unsigned char> cur(stride);
    GrayImage img = make_image(w, h, depth == 8 ? 255.0 : 65535.0);
    for (int y = 0; y < h; ++y) {
        const unsigned char* row = &raw[std::size_t(y) * (stride + 1)];
        const int filter = row[0];
        const unsigned char* src = row + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= bpp ? cur[i - bpp] : 0;
            const int up = prev[i];
            const int c = i >= bpp ? prev[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
            case 0: break;
            case 1: v += a; break;
            case 2: v += up; break;
            case 3: v += (a + up) / 2; break;
            case 4: v += paeth(a, up, c); break;
            default: fail(ErrorCode::format, path + ": bad PNG filter type");
            }
            cur[i] = (unsigned char)(v & 0xff);
        }
        for (int x = 0; x < w; ++x) {
            const unsigned char* px = &cur[std::size_t(x) * bpp];
            double acc = 0.0;
            const int color_channels = channels == 2 ? 1 : (channels == 4 ? 3 : channels);
            for (int ch = 0; ch < color_channels; ++ch) {
                if (depth == 8)
                    acc += px[ch];
                else
                    acc += double((unsigned(px[2 * ch]) << 8) | px[2 * ch + 1]);
            }
            img.at(y, x) = acc / color_channels;
        }
        std::swap(prev, cur);
    }
    return img;
}

void save_png(const GrayImage& img, const std::string& path)
{
    const bool wide = img.max_value > 255.5;
    const int maxval = wide ? 65535 : 255;
    const std::size_t bpp = wide ? 2 : 1;
    const std::size_t stride = std::size_t(img.width) * bpp;

    std::vector<unsigned char> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        unsigned char* row = &raw[std::size_t(y) * (stride + 1)];
        row[0] = 0; // filter: none
        for (int x = 0; x < img.width; ++x) {
            long q = std::lround(std::clamp(img.at(y, x), 0.0, double(maxval)));
            if (wide) {
                row[1 + 2 * x] = (unsigned char)(q >> 8);
                row[2 + 2 * x] = (unsigned char)(q & 0xff);
            } else {
                row[1 + x] = (unsigned char)q;
            }
        }
    }

    uLongf comp_len = compressBound(uLong(raw.size()));
    std::vector<unsigned char> comp(comp_len);
    require(compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), 6) == Z_OK,
            ErrorCode::internal, "PNG deflate failed");
    comp.resize(comp_len);

    std::vector<unsigned char> out(kPngSig, kPngSig + 8);
    auto chunk = [&out](const char* type, const std::vector<unsigned char>& data) {
        put_be32(out, uint32_t(data.size()));
        std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        uLong crc = crc32(0, out.data() + start, uInt(out.size() - start));
        put_be32(out, uint32_t(crc));
    };

    std::vector<unsigned char> ihdr;
    put_be32(ihdr, uint32_t(img.width));
    put_be32(ihdr, uint32_t(img.height));
    ihdr.push_back(wide ? 16 : 8); // depth
    ihdr.push_back(0);             // color: grayscale
    ihdr.push_back(0);             // compression
    ihdr.push_back(0);             // filter
    ihdr.push_back(0);             // interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", comp);
    chunk("IEND", {});
    write_file(path, out);
}

} // namespace

GrayImage make_image(int width, int height, double max_value, double fill)
{
    require(width > 0 && height > 0, ErrorCode::invalid_argument, "image dimensions must be positive");
    GrayImage img;
    img.width = width;
    img.height = height;
    img.max_value = max_value;
    img.pixels.assign(std::size_t(width) * height, fill);
    return img;
}

GrayImage load_image(const std::string& path)
{
    auto bytes = read_file(path);
    if (is_png(bytes))
        return load_png(bytes, path);
    if (is_pgm(bytes))
        return load_pgm(bytes);
    fail(ErrorCode::format, path + ": not a PNG or binary PGM file");
}

void save_image(const GrayImage& img, const std::string& path)
{
    require(!img.empty(), ErrorCode::invalid_argument, "save_image: empty image");
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") {
        save_pgm(img, path);
    } else if (path.size() >= 4 && path.substr(path.size() - 4) == ".png") {
        save_png(img, path);
    } else {
        fail(ErrorCode::invalid_argument, path + ": unknown image extension (use .png or .pgm)");
    }
}

GrayImage normalized(const GrayImage& img)
{
    GrayImage out = img;
    if (img.max_value != 1.0) {
        for (double& v : out.pixels)
            v /= img.max_value;
        out.max_value = 1.0;
    }
    return out;
}

Tensor to_tensor(const GrayImage& img)
{
    return Tensor::from_data({1, img.height, img.width, 1}, img.pixels);
}

GrayImage from_tensor(const Tensor& t, double max_value)
{
    const Shape s = t.shape();
    require(s.c == 1, ErrorCode::shape_mismatch, "from_tensor: expected one channel");
    GrayImage img = make_image(s.w, s.h, max_value);
    auto v = t.data();
    std::copy(v.begin(), v.begin() + std::ptrdiff_t(img.pixels.size()), img.pixels.begin());
    return img;
}

std::vector<std::string> list_image_files(const std::string& dir_or_manifest)
{
    namespace fs = std::filesystem;
    std::vector<std::string> out;
    if (fs::is_directory(dir_or_manifest)) {
        for (const auto& entry : fs::directory_iterator(dir_or_manifest)) {
            if (!entry.is_regular_file())
                continue;
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (ext == ".png" || ext == ".pgm")
                out.push_back(entry.path().string());
        }
    } else if (fs::is_regular_file(dir_or_manifest)) {
        std::ifstream f(dir_or_manifest);
        std::string line;
        while (std::getline(f, line)) {
            if (!line.empty() && line[0] != '#')
                out.push_back(line);
        }
    } else {
        fail(ErrorCode::io, dir_or_manifest + ": no such directory or manifest file");
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace avrfn
