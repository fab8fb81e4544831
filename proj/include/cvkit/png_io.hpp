#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cvkit/types.hpp"

namespace cvkit {

struct PngHeader {
    std::size_t height = 0;
    std::size_t width = 0;
    bool color = false;     // RGB or palette source
    bool colormap = false;  // palette source
    bool alpha = false;
    bool sixteen_bit = false;
};

/// Reads only the signature and header chunks. Throws FormatError.
PngHeader read_png_header(const std::filesystem::path& path);

/// Decodes an 8-bit PNG to RGB. Grayscale is replicated and alpha dropped.
ImageTensor read_png_rgb(const std::filesystem::path& path);

/// Decodes an 8-bit grayscale PNG into raw byte values. Color or
/// palette images are rejected with FormatError.
std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height, std::size_t& width);

/// Writes 8-bit RGB; values are rounded to the nearest integer.
void write_png_rgb(const std::filesystem::path& path, const ImageTensor& img);

void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    const std::vector<std::uint8_t>& pixels);

}  // namespace cvkit
