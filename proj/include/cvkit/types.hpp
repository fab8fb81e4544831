#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvkit {

/// Input that fails to parse or violates a file-format contract.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs that parse individually but disagree with each other
/// (image id sets, directory stems).
class ConsistencyError : public std::invalid_argument {
public:
    explicit ConsistencyError(const std::string& what, std::vector<std::string> items = {})
        : std::invalid_argument(what), items_(std::move(items)) {}

    const std::vector<std::string>& items() const noexcept { return items_; }

private:
    std::vector<std::string> items_;
};

struct ImageSize {
    std::size_t height = 0;
    std::size_t width = 0;

    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// RGB raster in (C, H, W) layout. Values are reals in [0, 255].
class ImageTensor {
public:
    static constexpr std::size_t kChannels = 3;

    /// Zero-filled image.
    ImageTensor(std::size_t height, std::size_t width);
    /// Takes ownership of channel-major, row-major data; validates shape and range.
    ImageTensor(std::size_t height, std::size_t width, std::vector<float> data);

    std::size_t channels() const noexcept { return kChannels; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    ImageSize size() const noexcept { return {height_, width_}; }

    float at(std::size_t c, std::size_t y, std::size_t x) const { return data_[index(c, y, x)]; }
    void set(std::size_t c, std::size_t y, std::size_t x, float v);

    const std::vector<float>& data() const noexcept { return data_; }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t index(std::size_t c, std::size_t y, std::size_t x) const noexcept
    {
        return (c * height_ + y) * width_ + x;
    }

    std::size_t height_;
    std::size_t width_;
    std::vector<float> data_;
};

/// Axis-aligned box in continuous pixel coordinates, y before x.
struct Box {
    double y_min = 0.0;
    double x_min = 0.0;
    double y_max = 0.0;
    double x_max = 0.0;

    double height() const noexcept { return y_max - y_min; }
    double width() const noexcept { return x_max - x_min; }
    double area() const noexcept { return height() * width(); }

    friend bool operator==(const Box&, const Box&) = default;
};

/// N boxes with optional parallel labels and scores.
///
/// Parallel lengths are enforced on construction. Geometric validity is
/// reported by validate_bbox_set() rather than thrown, so malformed input
/// can still be inspected.
class BBoxSet {
public:
    BBoxSet() = default;
    explicit BBoxSet(std::vector<Box> boxes,
                     std::optional<std::vector<int>> labels = std::nullopt,
                     std::optional<std::vector<double>> scores = std::nullopt);

    std::size_t size() const noexcept { return boxes_.size(); }
    bool empty() const noexcept { return boxes_.empty(); }

    const std::vector<Box>& boxes() const noexcept { return boxes_; }
    const Box& operator[](std::size_t i) const { return boxes_[i]; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    bool has_scores() const noexcept { return scores_.has_value(); }
    const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }
    const std::optional<std::vector<double>>& scores() const noexcept { return scores_; }

    /// Same labels/scores, new geometry (must have the same length).
    BBoxSet with_boxes(std::vector<Box> boxes) const;
    /// Subset in the given order.
    BBoxSet select(const std::vector<std::size_t>& indices) const;

    friend bool operator==(const BBoxSet&, const BBoxSet&) = default;

private:
    std::vector<Box> boxes_;
    std::optional<std::vector<int>> labels_;
    std::optional<std::vector<double>> scores_;
};

/// Per-pixel class indices; -1 is the ignore sentinel.
class SegMap {
public:
    static constexpr std::int32_t kIgnore = -1;

    SegMap(std::size_t height, std::size_t width, std::vector<std::int32_t> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    ImageSize size() const noexcept { return {height_, width_}; }
    std::int32_t at(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }
    const std::vector<std::int32_t>& data() const noexcept { return data_; }

    friend bool operator==(const SegMap&, const SegMap&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::int32_t> data_;
};

using Rgb = std::array<std::uint8_t, 3>;

struct ColorPalette {
    std::vector<Rgb> colors;

    std::size_t n_class() const noexcept { return colors.size(); }
};

/// Empty iff every box is well-formed, inside [0, height] x [0, width], and
/// labels/scores are in range. One message per violation.
std::vector<std::string> validate_bbox_set(const BBoxSet& b, ImageSize image_size);

/// PASCAL VOC colormap for classes [0, n_class). Throws std::invalid_argument
/// unless 1 <= n_class <= 256.
ColorPalette voc_color_palette(std::size_t n_class);

}  // namespace cvkit
