#include "cvkit/visualization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "font5x7.hpp"

namespace cvkit {

namespace {

constexpr int kTagPad = 1;
constexpr int kGlyphAdvance = detail::kGlyphWidth + 1;

// Mutable RGB canvas that silently drops writes outside the image.
class Canvas {
public:
    explicit Canvas(const ImageTensor& img) : h_(img.height()), w_(img.width()), data_(img.data()) {}

    void put(long long y, long long x, const Rgb& color)
    {
        if (y < 0 || x < 0 || y >= static_cast<long long>(h_) || x >= static_cast<long long>(w_)) return;
        const std::size_t p = static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x);
        for (std::size_t c = 0; c < 3; ++c) data_[c * h_ * w_ + p] = color[c];
    }

    void fill(long long y0, long long x0, long long y1, long long x1, const Rgb& color)
    {
        y0 = std::max(y0, 0LL);
        x0 = std::max(x0, 0LL);
        y1 = std::min(y1, static_cast<long long>(h_));
        x1 = std::min(x1, static_cast<long long>(w_));
        for (long long y = y0; y < y1; ++y) {
            for (long long x = x0; x < x1; ++x) put(y, x, color);
        }
    }

    ImageTensor finish() && { return ImageTensor(h_, w_, std::move(data_)); }

private:
    std::size_t h_;
    std::size_t w_;
    std::vector<float> data_;
};

Rgb text_color_for(const Rgb& bg)
{
    const double luma = 0.299 * bg[0] + 0.587 * bg[1] + 0.114 * bg[2];
    return luma >= 128.0 ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
}

void draw_text(Canvas& canvas, long long top, long long left, const std::string& text, const Rgb& color)
{
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto& columns = detail::glyph(text[i]);
        const long long gx = left + static_cast<long long>(i) * kGlyphAdvance;
        for (int col = 0; col < detail::kGlyphWidth; ++col) {
            for (int row = 0; row < detail::kGlyphHeight; ++row) {
                if ((columns[col] >> row) & 1u) canvas.put(top + row, gx + col, color);
            }
        }
    }
}

}  // namespace

void RenderStyle::validate() const
{
    if (border_width < 1) throw std::invalid_argument("render style: border_width must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("render style: alpha must be in [0, 1]");
}

TagSize tag_size(const std::string& text) noexcept
{
    return {static_cast<std::size_t>(kTagPad + kGlyphAdvance * static_cast<int>(text.size())),
            static_cast<std::size_t>(2 * kTagPad + detail::kGlyphHeight)};
}

std::string score_tag_text(const std::string& name, double score)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", score);
    return name + ": " + buf;
}

ImageTensor vis_bbox(const ImageTensor& img, const BBoxSet& b, const std::vector<std::string>& names,
                     const ColorPalette& palette, const RenderStyle& style)
{
    style.validate();
    if (b.empty()) return img;
    if (!b.has_labels()) throw std::invalid_argument("vis_bbox: boxes need labels");
    const auto& labels = *b.labels();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= names.size()) {
            throw std::invalid_argument("vis_bbox: label " + std::to_string(label) + " has no class name");
        }
        if (static_cast<std::size_t>(label) >= palette.n_class()) {
            throw std::invalid_argument("vis_bbox: label " + std::to_string(label) + " has no palette color");
        }
    }

    Canvas canvas(img);
    const long long bw = style.border_width;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Box& box = b[i];
        const Rgb& color = palette.colors[static_cast<std::size_t>(labels[i])];
        const long long y0 = std::llround(box.y_min);
        const long long x0 = std::llround(box.x_min);
        const long long y1 = std::llround(box.y_max);
        const long long x1 = std::llround(box.x_max);
        if (y1 <= y0 || x1 <= x0) continue;

        canvas.fill(y0, x0, std::min(y0 + bw, y1), x1, color);
        canvas.fill(std::max(y1 - bw, y0), x0, y1, x1, color);
        canvas.fill(y0, x0, y1, std::min(x0 + bw, x1), color);
        canvas.fill(y0, std::max(x1 - bw, x0), y1, x1, color);

        if (!style.draw_score || !b.has_scores()) continue;
        const std::string text = score_tag_text(names[static_cast<std::size_t>(labels[i])], (*b.scores())[i]);
        const TagSize tag = tag_size(text);
        const auto th = static_cast<long long>(tag.height);
        const auto tw = static_cast<long long>(tag.width);
        const long long top = y0 - th >= 0 ? y0 - th : y0;
        canvas.fill(top, x0, top + th, x0 + tw, color);
        draw_text(canvas, top + kTagPad, x0 + kTagPad, text, text_color_for(color));
    }
    return std::move(canvas).finish();
}

ImageTensor vis_semantic_segmentation(const ImageTensor& img, const SegMap& m, const ColorPalette& palette,
                                      const RenderStyle& style)
{
    style.validate();
    if (img.size() != m.size()) throw std::invalid_argument("vis_semantic_segmentation: image and map sizes differ");
    for (auto v : m.data()) {
        if (v >= 0 && static_cast<std::size_t>(v) >= palette.n_class()) {
            throw std::invalid_argument("vis_semantic_segmentation: class " + std::to_string(v) +
                                        " has no palette color");
        }
    }

    if (style.alpha == 0.0) return img;

    const std::size_t plane = img.height() * img.width();
    std::vector<float> data = img.data();
    const double a = style.alpha;
    for (std::size_t p = 0; p < plane; ++p) {
        const auto cls = m.data()[p];
        if (cls == SegMap::kIgnore) continue;
        const Rgb& color = palette.colors[static_cast<std::size_t>(cls)];
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = (1.0 - a) * data[c * plane + p] + a * color[c];
            data[c * plane + p] = static_cast<float>(std::round(v));
        }
    }
    return ImageTensor(img.height(), img.width(), std::move(data));
}

}  // namespace cvkit
