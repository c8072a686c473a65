#ifndef OOBSIM_IMAGE_HPP
#define OOBSIM_IMAGE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "oobsim/common.hpp"

namespace oobsim {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Row-major RGB8 frame.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height), px_(static_cast<std::size_t>(width) * height * 3) {
        if (width <= 0 || height <= 0) throw DimensionMismatchError("RasterImage: bad dimensions");
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) set(x, y, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    Rgb at(int x, int y) const {
        std::size_t i = index(x, y);
        return {px_[i], px_[i + 1], px_[i + 2]};
    }

    void set(int x, int y, Rgb c) {
        std::size_t i = index(x, y);
        px_[i] = c.r;
        px_[i + 1] = c.g;
        px_[i + 2] = c.b;
    }

    const std::vector<std::uint8_t>& pixels() const { return px_; }
    std::vector<std::uint8_t>& pixels() { return px_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int x, int y) const {
        if (!in_bounds(x, y)) throw OutOfBoundsError("RasterImage: pixel out of bounds");
        return (static_cast<std::size_t>(y) * width_ + x) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> px_;
};

// --- PPM (P6, maxval 255) ---------------------------------------------------

inline void write_ppm(const RasterImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write PPM: " + path);
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data()),
              static_cast<long>(img.pixels().size()));
}

inline RasterImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read PPM: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IoError("not a P6 PPM: " + path);
    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IoError("truncated PPM header: " + path);
    };
    int w = std::atoi(next_token().c_str());
    int h = std::atoi(next_token().c_str());
    int maxval = std::atoi(next_token().c_str());
    if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PPM header: " + path);
    in.get();  // single whitespace after maxval
    RasterImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels().data()), static_cast<long>(img.pixels().size()));
    if (in.gcount() != static_cast<long>(img.pixels().size()))
        throw IoError("truncated PPM payload: " + path);
    return img;
}

// --- drawing helpers ---------------------------------------------------------

/// Filled disc, clipped to the image.
inline void draw_disc(RasterImage& img, int cx, int cy, int radius, Rgb color) {
    for (int y = cy - radius; y <= cy + radius; ++y) {
        for (int x = cx - radius; x <= cx + radius; ++x) {
            if (!img.in_bounds(x, y)) continue;
            int dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= radius * radius) img.set(x, y, color);
        }
    }
}

inline void draw_rect_outline(RasterImage& img, int x0, int y0, int x1, int y1, Rgb color,
                              int thickness = 2) {
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0 - t; x <= x1 + t; ++x) {
            if (img.in_bounds(x, y0 - t)) img.set(x, y0 - t, color);
            if (img.in_bounds(x, y1 + t)) img.set(x, y1 + t, color);
        }
        for (int y = y0 - t; y <= y1 + t; ++y) {
            if (img.in_bounds(x0 - t, y)) img.set(x0 - t, y, color);
            if (img.in_bounds(x1 + t, y)) img.set(x1 + t, y, color);
        }
    }
}

inline void draw_line(RasterImage& img, int x0, int y0, int x1, int y1, Rgb color) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (img.in_bounds(x0, y0)) img.set(x0, y0, color);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace oobsim

#endif  // OOBSIM_IMAGE_HPP
