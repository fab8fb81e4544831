#include "cvkit/types.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace cvkit {

namespace {

bool valid_pixel(float v) noexcept { return std::isfinite(v) && v >= 0.0f && v <= 255.0f; }

}  // namespace

ImageTensor::ImageTensor(std::size_t height, std::size_t width)
    : ImageTensor(height, width, std::vector<float>(kChannels * height * width, 0.0f))
{
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data))
{
    if (height_ == 0 || width_ == 0) {
        throw std::invalid_argument("image height and width must be >= 1");
    }
    if (data_.size() != kChannels * height_ * width_) {
        throw std::invalid_argument("image data size does not match (3, H, W)");
    }
    for (float v : data_) {
        if (!valid_pixel(v)) {
            throw std::invalid_argument("image value outside [0, 255]");
        }
    }
}

void ImageTensor::set(std::size_t c, std::size_t y, std::size_t x, float v)
{
    if (!valid_pixel(v)) {
        throw std::invalid_argument("image value outside [0, 255]");
    }
    data_[index(c, y, x)] = v;
}

BBoxSet::BBoxSet(std::vector<Box> boxes,
                 std::optional<std::vector<int>> labels,
                 std::optional<std::vector<double>> scores)
    : boxes_(std::move(boxes)), labels_(std::move(labels)), scores_(std::move(scores))
{
    if (labels_ && labels_->size() != boxes_.size()) {
        throw std::invalid_argument("labels length does not match number of boxes");
    }
    if (scores_ && scores_->size() != boxes_.size()) {
        throw std::invalid_argument("scores length does not match number of boxes");
    }
}

BBoxSet BBoxSet::with_boxes(std::vector<Box> boxes) const
{
    return BBoxSet(std::move(boxes), labels_, scores_);
}

BBoxSet BBoxSet::select(const std::vector<std::size_t>& indices) const
{
    std::vector<Box> boxes;
    boxes.reserve(indices.size());
    std::optional<std::vector<int>> labels;
    std::optional<std::vector<double>> scores;
    if (labels_) {
        labels.emplace();
        labels->reserve(indices.size());
    }
    if (scores_) {
        scores.emplace();
        scores->reserve(indices.size());
    }
    for (std::size_t i : indices) {
        boxes.push_back(boxes_.at(i));
        if (labels) labels->push_back((*labels_)[i]);
        if (scores) scores->push_back((*scores_)[i]);
    }
    return BBoxSet(std::move(boxes), std::move(labels), std::move(scores));
}

SegMap::SegMap(std::size_t height, std::size_t width, std::vector<std::int32_t> data)
    : height_(height), width_(width), data_(std::move(data))
{
    if (height_ == 0 || width_ == 0) {
        throw std::invalid_argument("segmentation map height and width must be >= 1");
    }
    if (data_.size() != height_ * width_) {
        throw std::invalid_argument("segmentation map data size does not match (H, W)");
    }
    for (auto v : data_) {
        if (v < kIgnore) {
            throw std::invalid_argument("segmentation map value below -1");
        }
    }
}

std::vector<std::string> validate_bbox_set(const BBoxSet& b, ImageSize image_size)
{
    std::vector<std::string> out;
    const auto height = static_cast<double>(image_size.height);
    const auto width = static_cast<double>(image_size.width);

    auto report = [&out](std::size_t i, const char* what) {
        std::ostringstream os;
        os << "box " << i << ": " << what;
        out.push_back(os.str());
    };

    for (std::size_t i = 0; i < b.size(); ++i) {
        const Box& box = b[i];
        if (!std::isfinite(box.y_min) || !std::isfinite(box.x_min) ||
            !std::isfinite(box.y_max) || !std::isfinite(box.x_max)) {
            report(i, "non-finite coordinate");
            continue;
        }
        if (box.y_min > box.y_max) report(i, "y_min > y_max");
        if (box.x_min > box.x_max) report(i, "x_min > x_max");
        if (box.y_min < 0.0) report(i, "y_min below 0");
        if (box.x_min < 0.0) report(i, "x_min below 0");
        if (box.y_max > height) report(i, "y_max exceeds height");
        if (box.x_max > width) report(i, "x_max exceeds width");
    }
    if (b.labels()) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            if ((*b.labels())[i] < 0) report(i, "negative label");
        }
    }
    if (b.scores()) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double s = (*b.scores())[i];
            if (!(s >= 0.0 && s <= 1.0)) report(i, "score outside [0, 1]");
        }
    }
    return out;
}

ColorPalette voc_color_palette(std::size_t n_class)
{
    if (n_class < 1 || n_class > 256) {
        throw std::invalid_argument("palette size must be in [1, 256]");
    }
    ColorPalette palette;
    palette.colors.reserve(n_class);
    for (std::size_t i = 0; i < n_class; ++i) {
        Rgb rgb{0, 0, 0};
        // bit k of i lands on bit (7 - k/3) of channel k % 3
        for (unsigned k = 0; k < 8; ++k) {
            if ((i >> k) & 1u) {
                rgb[k % 3] = static_cast<std::uint8_t>(rgb[k % 3] | (1u << (7 - k / 3)));
            }
        }
        palette.colors.push_back(rgb);
    }
    return palette;
}

}  // namespace cvkit
