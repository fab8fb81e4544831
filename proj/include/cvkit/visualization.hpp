#pragma once

#include <string>
#include <vector>

#include "cvkit/types.hpp"

namespace cvkit {

struct RenderStyle {
    int border_width = 3;
    double alpha = 0.5;
    bool draw_score = true;

    void validate() const;
};

/// Width and height in pixels of a label tag holding `text`.
struct TagSize {
    std::size_t width;
    std::size_t height;
};
TagSize tag_size(const std::string& text) noexcept;

/// "name: 0.XX" as drawn on score tags.
std::string score_tag_text(const std::string& name, double score);

/// Draws each box as a border of style.border_width pixels inside its
/// rounded extent, in palette[label]. With draw_score and scores present, a
/// filled tag with "name: 0.XX" sits above the top-left corner, or below it
/// when it would leave the top of the image. Later boxes paint over earlier
/// ones; nothing is written outside the image.
ImageTensor vis_bbox(const ImageTensor& img, const BBoxSet& b, const std::vector<std::string>& names,
                     const ColorPalette& palette, const RenderStyle& style = {});

/// out = round((1 - alpha) * img + alpha * palette[class]) per pixel; ignore
/// pixels are copied unchanged.
ImageTensor vis_semantic_segmentation(const ImageTensor& img, const SegMap& m, const ColorPalette& palette,
                                      const RenderStyle& style = {});

}  // namespace cvkit
