#include "cvkit/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cvkit {

namespace {

struct Tap {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

std::vector<Tap> sampling_taps(std::size_t in, std::size_t out)
{
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double last = static_cast<double>(in - 1);
    for (std::size_t o = 0; o < out; ++o) {
        double p = (static_cast<double>(o) + 0.5) * scale - 0.5;
        p = std::clamp(p, 0.0, last);
        const auto lo = static_cast<std::size_t>(std::floor(p));
        const std::size_t hi = std::min(lo + 1, in - 1);
        taps[o] = {lo, hi, p - static_cast<double>(lo)};
    }
    return taps;
}

bool center_inside(const Box& box, const Box& region)
{
    const double cy = 0.5 * (box.y_min + box.y_max);
    const double cx = 0.5 * (box.x_min + box.x_max);
    return region.y_min <= cy && cy <= region.y_max && region.x_min <= cx && cx <= region.x_max;
}

}  // namespace

ImageTensor resize_image(const ImageTensor& img, ImageSize out_size)
{
    if (out_size.height == 0 || out_size.width == 0) {
        throw std::invalid_argument("resize_image: output size must be >= 1");
    }
    if (out_size == img.size()) return img;

    const auto ty = sampling_taps(img.height(), out_size.height);
    const auto tx = sampling_taps(img.width(), out_size.width);
    std::vector<float> data(ImageTensor::kChannels * out_size.height * out_size.width);

    std::size_t k = 0;
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        for (const Tap& y : ty) {
            for (const Tap& x : tx) {
                const double top = (1.0 - x.frac) * img.at(c, y.lo, x.lo) + x.frac * img.at(c, y.lo, x.hi);
                const double bottom = (1.0 - x.frac) * img.at(c, y.hi, x.lo) + x.frac * img.at(c, y.hi, x.hi);
                const double v = (1.0 - y.frac) * top + y.frac * bottom;
                data[k++] = static_cast<float>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return ImageTensor(out_size.height, out_size.width, std::move(data));
}

ImageTensor flip_image(const ImageTensor& img, FlipParams params)
{
    if (!params.x_flip && !params.y_flip) return img;
    const std::size_t h = img.height();
    const std::size_t w = img.width();
    std::vector<float> data(img.data().size());
    std::size_t k = 0;
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            const std::size_t sy = params.y_flip ? h - 1 - y : y;
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t sx = params.x_flip ? w - 1 - x : x;
                data[k++] = img.at(c, sy, sx);
            }
        }
    }
    return ImageTensor(h, w, std::move(data));
}

FlipParams draw_flip_params(bool x_random, bool y_random, RandomSource& rand)
{
    FlipParams p;
    // top bit of each 64-bit draw; avoids implementation-defined distributions
    if (x_random) p.x_flip = (rand() >> 63) != 0;
    if (y_random) p.y_flip = (rand() >> 63) != 0;
    return p;
}

std::pair<ImageTensor, FlipParams> random_flip(const ImageTensor& img, bool x_random, bool y_random,
                                               RandomSource& rand)
{
    const FlipParams p = draw_flip_params(x_random, y_random, rand);
    return {flip_image(img, p), p};
}

BBoxSet flip_bbox(const BBoxSet& b, ImageSize size, FlipParams params)
{
    if (!params.x_flip && !params.y_flip) return b;
    const auto h = static_cast<double>(size.height);
    const auto w = static_cast<double>(size.width);
    std::vector<Box> boxes = b.boxes();
    for (Box& box : boxes) {
        if (params.y_flip) {
            const double y_min = h - box.y_max;
            const double y_max = h - box.y_min;
            box.y_min = y_min;
            box.y_max = y_max;
        }
        if (params.x_flip) {
            const double x_min = w - box.x_max;
            const double x_max = w - box.x_min;
            box.x_min = x_min;
            box.x_max = x_max;
        }
    }
    return b.with_boxes(std::move(boxes));
}

BBoxSet resize_bbox(const BBoxSet& b, ImageSize in_size, ImageSize out_size)
{
    if (in_size.height == 0 || in_size.width == 0 || out_size.height == 0 || out_size.width == 0) {
        throw std::invalid_argument("resize_bbox: sizes must be >= 1");
    }
    const double sy = static_cast<double>(out_size.height) / static_cast<double>(in_size.height);
    const double sx = static_cast<double>(out_size.width) / static_cast<double>(in_size.width);
    std::vector<Box> boxes = b.boxes();
    for (Box& box : boxes) {
        box.y_min *= sy;
        box.y_max *= sy;
        box.x_min *= sx;
        box.x_max *= sx;
    }
    return b.with_boxes(std::move(boxes));
}

BBoxSet translate_bbox(const BBoxSet& b, double dy, double dx)
{
    std::vector<Box> boxes = b.boxes();
    for (Box& box : boxes) {
        box.y_min += dy;
        box.y_max += dy;
        box.x_min += dx;
        box.x_max += dx;
    }
    return b.with_boxes(std::move(boxes));
}

std::pair<BBoxSet, std::vector<std::size_t>> crop_bbox(const BBoxSet& b, const Box& region,
                                                       bool allow_outside_center)
{
    if (region.y_min > region.y_max || region.x_min > region.x_max) {
        throw std::invalid_argument("crop_bbox: malformed region");
    }
    std::vector<std::size_t> kept;
    std::vector<Box> clipped;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Box& box = b[i];
        const Box c{std::max(box.y_min, region.y_min), std::max(box.x_min, region.x_min),
                    std::min(box.y_max, region.y_max), std::min(box.x_max, region.x_max)};
        if (c.y_max <= c.y_min || c.x_max <= c.x_min) continue;
        if (!allow_outside_center && !center_inside(box, region)) continue;
        kept.push_back(i);
        clipped.push_back({c.y_min - region.y_min, c.x_min - region.x_min, c.y_max - region.y_min,
                           c.x_max - region.x_min});
    }
    BBoxSet out = b.select(kept).with_boxes(std::move(clipped));
    return {std::move(out), std::move(kept)};
}

ImageTensor crop_image(const ImageTensor& img, std::size_t y_min, std::size_t x_min, std::size_t y_max,
                       std::size_t x_max)
{
    if (y_min >= y_max || x_min >= x_max || y_max > img.height() || x_max > img.width()) {
        throw std::invalid_argument("crop_image: region must be non-empty and inside the image");
    }
    const std::size_t h = y_max - y_min;
    const std::size_t w = x_max - x_min;
    std::vector<float> data;
    data.reserve(ImageTensor::kChannels * h * w);
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        for (std::size_t y = y_min; y < y_max; ++y) {
            for (std::size_t x = x_min; x < x_max; ++x) data.push_back(img.at(c, y, x));
        }
    }
    return ImageTensor(h, w, std::move(data));
}

}  // namespace cvkit
