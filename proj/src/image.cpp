#include "polypseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace polypseg {

namespace {

void check_dims(int width, int height, std::size_t size, std::size_t channels) {
    if (width < 3 || height < 3)
        throw std::invalid_argument("raster must be at least 3x3, got " + std::to_string(width) + "x" +
                                    std::to_string(height));
    if (size != static_cast<std::size_t>(width) * height * channels)
        throw std::invalid_argument("raster data length does not match dimensions");
}

std::uint8_t round_to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

RgbFrame::RgbFrame(int width, int height)
    : RgbFrame(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                        std::max(height, 0) * 3)) {}

RgbFrame::RgbFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width_, height_, data_.size(), 3);
}

Plane::Plane(int width, int height, std::uint8_t fill)
    : Plane(width, height,
            std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)) {}

Plane::Plane(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width_, height_, data_.size(), 1);
}

std::uint8_t Plane::clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

GradientField::GradientField(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width_) * height_)
        throw std::invalid_argument("gradient data length does not match dimensions");
}

Plane to_grayscale(const RgbFrame& frame) {
    Plane out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            const Rgb c = frame.at(x, y);
            out.at(x, y) = round_to_byte(0.299 * c.r + 0.587 * c.g + 0.114 * c.b);
        }
    return out;
}

Plane extract_channel(const RgbFrame& frame, Channel channel) {
    Plane out(frame.width(), frame.height());
    const auto src = frame.data();
    const std::size_t offset = channel == Channel::Red ? 0 : channel == Channel::Green ? 1 : 2;
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            out.at(x, y) = src[(static_cast<std::size_t>(y) * frame.width() + x) * 3 + offset];
    return out;
}

RgbFrame merge_channels(const Plane& red, const Plane& green, const Plane& blue) {
    if (red.width() != green.width() || red.width() != blue.width() || red.height() != green.height() ||
        red.height() != blue.height())
        throw std::invalid_argument("channel planes differ in size");
    RgbFrame out(red.width(), red.height());
    for (int y = 0; y < red.height(); ++y)
        for (int x = 0; x < red.width(); ++x)
            out.set(x, y, {red.at(x, y), green.at(x, y), blue.at(x, y)});
    return out;
}

Plane to_hue(const RgbFrame& frame) {
    Plane out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            const Rgb c = frame.at(x, y);
            const int hi = std::max({c.r, c.g, c.b});
            const int lo = std::min({c.r, c.g, c.b});
            if (hi == lo) {
                out.at(x, y) = 0;
                continue;
            }
            const double delta = hi - lo;
            double deg;
            if (hi == c.r)
                deg = 60.0 * ((c.g - c.b) / delta);
            else if (hi == c.g)
                deg = 60.0 * ((c.b - c.r) / delta + 2.0);
            else
                deg = 60.0 * ((c.r - c.g) / delta + 4.0);
            if (deg < 0.0) deg += 360.0;
            out.at(x, y) = round_to_byte(deg / 360.0 * 255.0);
        }
    return out;
}

GradientField gradient_magnitude(const Plane& plane) {
    std::vector<double> g(static_cast<std::size_t>(plane.width()) * plane.height());
    for (int y = 0; y < plane.height(); ++y)
        for (int x = 0; x < plane.width(); ++x) {
            const int dx = int(plane.clamped(x + 1, y)) - int(plane.clamped(x - 1, y));
            const int dy = int(plane.clamped(x, y + 1)) - int(plane.clamped(x, y - 1));
            g[static_cast<std::size_t>(y) * plane.width() + x] = std::abs(dx) + std::abs(dy);
        }
    return {plane.width(), plane.height(), std::move(g)};
}

namespace {

// Source coordinate for destination (x, y) after `turns` clockwise quarter turns.
Pixel rotated_source(int x, int y, int src_w, int src_h, int turns) {
    switch (turns & 3) {
        case 0: return {x, y};
        case 1: return {y, src_h - 1 - x};
        case 2: return {src_w - 1 - x, src_h - 1 - y};
        default: return {src_w - 1 - y, x};
    }
}

}  // namespace

Plane rotate_quarter(const Plane& plane, int turns) {
    const bool swap = (turns & 1) != 0;
    Plane out(swap ? plane.height() : plane.width(), swap ? plane.width() : plane.height());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const Pixel s = rotated_source(x, y, plane.width(), plane.height(), turns);
            out.at(x, y) = plane.at(s.x, s.y);
        }
    return out;
}

RgbFrame rotate_quarter(const RgbFrame& frame, int turns) {
    const bool swap = (turns & 1) != 0;
    RgbFrame out(swap ? frame.height() : frame.width(), swap ? frame.width() : frame.height());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const Pixel s = rotated_source(x, y, frame.width(), frame.height(), turns);
            out.set(x, y, frame.at(s.x, s.y));
        }
    return out;
}

}  // namespace polypseg
