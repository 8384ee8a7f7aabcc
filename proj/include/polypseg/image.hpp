#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace polypseg {

/// Pixel coordinate, x = column, y = row.
struct Pixel {
    int x = 0;
    int y = 0;
    bool operator==(const Pixel&) const = default;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// 8-bit three-channel raster, row-major RGB triplets.
/// Frames must be at least 3x3 so every pixel has a full 3x3 neighborhood
/// under edge replication.
class RgbFrame {
public:
    RgbFrame() = default;
    RgbFrame(int width, int height);
    RgbFrame(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    Rgb at(int x, int y) const {
        const std::size_t i = index(x, y) * 3;
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const std::size_t i = index(x, y) * 3;
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }

    std::span<const std::uint8_t> data() const { return data_; }

    bool operator==(const RgbFrame&) const = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Single 8-bit channel, row-major.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, std::uint8_t fill = 0);
    Plane(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Edge-replicated read: coordinates are clamped into the raster.
    std::uint8_t clamped(int x, int y) const;

    std::span<const std::uint8_t> data() const { return data_; }

    bool operator==(const Plane&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Non-negative gradient magnitudes, row-major.
class GradientField {
public:
    GradientField(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const double> data() const { return data_; }

private:
    int width_;
    int height_;
    std::vector<double> data_;
};

enum class Channel { Red, Green, Blue };

/// BT.601 luma, rounded and clamped to [0,255].
Plane to_grayscale(const RgbFrame& frame);

Plane extract_channel(const RgbFrame& frame, Channel channel);

/// Inverse of extract_channel over all three channels.
RgbFrame merge_channels(const Plane& red, const Plane& green, const Plane& blue);

/// HSV hue in degrees rescaled from [0,360) to [0,255]. Achromatic pixels map to 0.
Plane to_hue(const RgbFrame& frame);

/// L1 norm of central differences with edge replication at the borders.
GradientField gradient_magnitude(const Plane& plane);

/// Rotate a raster by quarter turns clockwise (turns in 0..3).
Plane rotate_quarter(const Plane& plane, int turns);
RgbFrame rotate_quarter(const RgbFrame& frame, int turns);

}  // namespace polypseg
