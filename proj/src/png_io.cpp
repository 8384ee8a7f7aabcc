#include "polypseg/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

namespace polypseg::png {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw PngError("cannot open " + path.string());
    return f;
}

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0;  // after transforms: 1 (gray) or 3 (rgb)
    int bit_depth = 8;
    std::vector<std::uint8_t> bytes;  // row-major, bit_depth/8 bytes per sample, big-endian for 16-bit
};

// Decodes to either gray or RGB without alpha; keeps 16-bit samples when `keep16`.
Decoded decode(const std::filesystem::path& path, bool keep16) {
    FilePtr file = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw PngError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("libpng init failed");
    }

    Decoded out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("corrupt PNG: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16 && !keep16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    out.bytes.resize(stride * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int depth,
            const std::uint8_t* bytes, std::size_t stride) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) png_write_row(png, const_cast<png_bytep>(bytes + stride * y));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbFrame read_rgb(const std::filesystem::path& path) {
    Decoded d = decode(path, false);
    if (d.channels == 3) return {d.width, d.height, std::move(d.bytes)};
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(d.width) * d.height * 3);
    for (std::size_t i = 0; i < d.bytes.size(); ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = d.bytes[i];
    return {d.width, d.height, std::move(rgb)};
}

Plane read_gray8(const std::filesystem::path& path) {
    Decoded d = decode(path, false);
    if (d.channels == 1) return {d.width, d.height, std::move(d.bytes)};
    return to_grayscale(RgbFrame(d.width, d.height, std::move(d.bytes)));
}

std::vector<std::uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height) {
    Decoded d = decode(path, true);
    if (d.channels != 1) throw PngError("expected single-channel PNG: " + path.string());
    width = d.width;
    height = d.height;
    std::vector<std::uint16_t> out(static_cast<std::size_t>(width) * height);
    if (d.bit_depth == 16) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<std::uint16_t>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.bytes[i];
    }
    return out;
}

void write_rgb(const std::filesystem::path& path, const RgbFrame& frame) {
    encode(path, frame.width(), frame.height(), PNG_COLOR_TYPE_RGB, 8, frame.data().data(),
           static_cast<std::size_t>(frame.width()) * 3);
}

void write_gray8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& data) {
    if (data.size() != static_cast<std::size_t>(width) * height) throw PngError("gray8 buffer size mismatch");
    encode(path, width, height, PNG_COLOR_TYPE_GRAY, 8, data.data(), static_cast<std::size_t>(width));
}

void write_gray16(const std::filesystem::path& path, int width, int height,
                  const std::vector<std::uint16_t>& data) {
    if (data.size() != static_cast<std::size_t>(width) * height) throw PngError("gray16 buffer size mismatch");
    std::vector<std::uint8_t> be(data.size() * 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        be[2 * i] = static_cast<std::uint8_t>(data[i] >> 8);
        be[2 * i + 1] = static_cast<std::uint8_t>(data[i] & 0xff);
    }
    encode(path, width, height, PNG_COLOR_TYPE_GRAY, 16, be.data(), static_cast<std::size_t>(width) * 2);
}

}  // namespace polypseg::png
