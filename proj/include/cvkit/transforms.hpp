#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "cvkit/dataset.hpp"
#include "cvkit/types.hpp"

namespace cvkit {

/// Explicit, seedable random source for augmentation. mt19937_64 output is
/// fully specified by the standard, so draws are reproducible everywhere.
using RandomSource = std::mt19937_64;

struct FlipParams {
    bool x_flip = false;
    bool y_flip = false;

    friend bool operator==(const FlipParams&, const FlipParams&) = default;
};

/// Bilinear resize with half-pixel-center sampling:
/// p_in = (p_out + 0.5) * in / out - 0.5, clamped to [0, in - 1].
ImageTensor resize_image(const ImageTensor& img, ImageSize out_size);

/// Mirrors the image along the requested axes.
ImageTensor flip_image(const ImageTensor& img, FlipParams params);

/// Flips each enabled axis with probability 1/2. One draw per enabled
/// axis from `rand`, x first; disabled axes consume no draws.
std::pair<ImageTensor, FlipParams> random_flip(const ImageTensor& img, bool x_random, bool y_random,
                                               RandomSource& rand);

/// Draws the flip decisions random_flip would take, without an image.
FlipParams draw_flip_params(bool x_random, bool y_random, RandomSource& rand);

/// Reflects boxes to match flip_image(img, params) for an image of `size`.
BBoxSet flip_bbox(const BBoxSet& b, ImageSize size, FlipParams params);

/// Scales y by out.height / in.height and x by out.width / in.width.
BBoxSet resize_bbox(const BBoxSet& b, ImageSize in_size, ImageSize out_size);

BBoxSet translate_bbox(const BBoxSet& b, double dy, double dx);

/// Crops boxes to `region` and expresses them in region coordinates.
///
/// A box survives iff its clipped area is positive and, unless
/// allow_outside_center is set, its original center lies in the closed
/// region. Returns the surviving boxes and their input positions.
std::pair<BBoxSet, std::vector<std::size_t>> crop_bbox(const BBoxSet& b, const Box& region,
                                                       bool allow_outside_center);

/// Pixel crop of rows [y_min, y_max) and columns [x_min, x_max).
ImageTensor crop_image(const ImageTensor& img, std::size_t y_min, std::size_t x_min, std::size_t y_max,
                       std::size_t x_max);

/// Lazily applies a function to every sample of a wrapped dataset.
template <typename In, typename Out>
class TransformDataset final : public Dataset<Out> {
public:
    using Fn = std::function<Out(In)>;

    TransformDataset(DatasetPtr<In> base, Fn fn) : base_(std::move(base)), fn_(std::move(fn))
    {
        if (!base_) throw std::invalid_argument("transform_dataset: null base dataset");
        if (!fn_) throw std::invalid_argument("transform_dataset: empty transform");
    }

    std::size_t size() const override { return base_->size(); }

    Out get(std::size_t i) const override
    {
        this->check_index(i);
        return fn_(base_->get(i));
    }

private:
    DatasetPtr<In> base_;
    Fn fn_;
};

template <typename In, typename F>
auto transform_dataset(DatasetPtr<In> base, F&& fn)
{
    using Out = std::invoke_result_t<F, In>;
    return DatasetPtr<Out>(
        std::make_shared<TransformDataset<In, Out>>(std::move(base), std::forward<F>(fn)));
}

}  // namespace cvkit
