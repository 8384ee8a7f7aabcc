#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "polypseg/image.hpp"

namespace polypseg::png {

struct PngError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Reads an 8-bit RGB, RGBA, gray or gray+alpha PNG as RGB (alpha discarded).
RgbFrame read_rgb(const std::filesystem::path& path);

/// Reads an 8-bit single-channel PNG. Color inputs are converted to luma.
Plane read_gray8(const std::filesystem::path& path);

/// Reads a 16-bit single-channel PNG into row-major values.
std::vector<std::uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height);

void write_rgb(const std::filesystem::path& path, const RgbFrame& frame);
void write_gray8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& data);
void write_gray16(const std::filesystem::path& path, int width, int height, const std::vector<std::uint16_t>& data);

}  // namespace polypseg::png
