#include "cvkit/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <string>

namespace cvkit {

namespace {

// RAII around libpng's simplified-API control block.
class PngReader {
public:
    explicit PngReader(const std::filesystem::path& path) : path_(path)
    {
        std::memset(&image_, 0, sizeof image_);
        image_.version = PNG_IMAGE_VERSION;
        if (!png_image_begin_read_from_file(&image_, path.c_str())) fail();
    }
    ~PngReader() { png_image_free(&image_); }

    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    png_image& image() noexcept { return image_; }

    std::vector<std::uint8_t> finish(png_uint_32 format)
    {
        image_.format = format;
        std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image_));
        if (!png_image_finish_read(&image_, nullptr, buffer.data(), 0, nullptr)) fail();
        return buffer;
    }

    [[noreturn]] void fail()
    {
        throw FormatError(path_.string() + ": cannot decode PNG: " + image_.message);
    }

private:
    std::filesystem::path path_;
    png_image image_{};
};

void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width, png_uint_32 format,
               const std::uint8_t* data)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    const int ok = png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr);
    const std::string message = image.message;
    png_image_free(&image);
    if (!ok) throw std::runtime_error(path.string() + ": cannot write PNG: " + message);
}

}  // namespace

PngHeader read_png_header(const std::filesystem::path& path)
{
    PngReader reader(path);
    const auto& im = reader.image();
    PngHeader h;
    h.height = im.height;
    h.width = im.width;
    h.color = (im.format & PNG_FORMAT_FLAG_COLOR) != 0;
    h.colormap = (im.format & PNG_FORMAT_FLAG_COLORMAP) != 0;
    h.alpha = (im.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    h.sixteen_bit = (im.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    return h;
}

ImageTensor read_png_rgb(const std::filesystem::path& path)
{
    PngReader reader(path);
    const png_uint_32 format = reader.image().format;
    if (format & PNG_FORMAT_FLAG_LINEAR) {
        throw FormatError(path.string() + ": only 8-bit PNG images are supported");
    }
    const std::size_t h = reader.image().height;
    const std::size_t w = reader.image().width;
    // Read alpha sources as RGBA and drop alpha, so nothing is composited.
    const bool alpha = (format & PNG_FORMAT_FLAG_ALPHA) != 0;
    const std::size_t stride = alpha ? 4 : 3;
    const auto pixels = reader.finish(alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB);
    std::vector<float> data(3 * h * w);
    for (std::size_t p = 0; p < h * w; ++p) {
        for (std::size_t c = 0; c < 3; ++c) data[c * h * w + p] = pixels[p * stride + c];
    }
    return ImageTensor(h, w, std::move(data));
}

std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height, std::size_t& width)
{
    PngReader reader(path);
    const png_uint_32 format = reader.image().format;
    if (format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_COLORMAP)) {
        throw FormatError(path.string() + ": label image is not grayscale");
    }
    if (format & PNG_FORMAT_FLAG_LINEAR) {
        throw FormatError(path.string() + ": label image is not 8-bit");
    }
    height = reader.image().height;
    width = reader.image().width;
    if (!(format & PNG_FORMAT_FLAG_ALPHA)) return reader.finish(PNG_FORMAT_GRAY);
    const auto ga = reader.finish(PNG_FORMAT_GA);
    std::vector<std::uint8_t> gray(height * width);
    for (std::size_t p = 0; p < gray.size(); ++p) gray[p] = ga[2 * p];
    return gray;
}

void write_png_rgb(const std::filesystem::path& path, const ImageTensor& img)
{
    const std::size_t h = img.height();
    const std::size_t w = img.width();
    std::vector<std::uint8_t> rgb(3 * h * w);
    const auto& data = img.data();
    for (std::size_t p = 0; p < h * w; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            rgb[p * 3 + c] = static_cast<std::uint8_t>(std::lround(data[c * h * w + p]));
        }
    }
    write_png(path, h, w, PNG_FORMAT_RGB, rgb.data());
}

void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    const std::vector<std::uint8_t>& pixels)
{
    if (pixels.size() != height * width) throw std::invalid_argument("write_png_gray: pixel count mismatch");
    write_png(path, height, width, PNG_FORMAT_GRAY, pixels.data());
}

}  // namespace cvkit
