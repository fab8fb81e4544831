#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cvkit/types.hpp"

namespace cvkit {

/// Regression offsets of a box relative to a reference box.
struct Loc {
    double dy = 0.0;
    double dx = 0.0;
    double dh = 0.0;
    double dw = 0.0;

    friend bool operator==(const Loc&, const Loc&) = default;
};

/// Default bound on |dh| and |dw| applied before exponentiation.
inline const double kDefaultLocClip = std::log(1000.0 / 16.0);

/// Dense row-major matrix of reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

double iou(const Box& a, const Box& b) noexcept;

/// Pairwise IoU, |a| x |b|. Zero-area unions give 0.
Matrix bbox_iou(std::span<const Box> a, std::span<const Box> b);
Matrix bbox_iou(const BBoxSet& a, const BBoxSet& b);

/// Greedy non-maximum suppression.
///
/// Boxes are visited by descending score (equal scores by ascending index;
/// input order when scores are absent). A box is kept iff its IoU with
/// every kept box is strictly below `thresh`. Stops after `limit` boxes.
/// Returns kept input indices in visiting order.
std::vector<std::size_t> non_maximum_suppression(std::span<const Box> boxes,
                                                 std::optional<std::span<const double>> scores,
                                                 double thresh,
                                                 std::optional<std::size_t> limit = std::nullopt);
std::vector<std::size_t> non_maximum_suppression(const BBoxSet& b, double thresh,
                                                 std::optional<std::size_t> limit = std::nullopt);

// ---------------------------------------------------------------------------
// Anchors and default boxes
// ---------------------------------------------------------------------------

struct AnchorConfig {
    double base_size = 16.0;
    std::vector<double> ratios{0.5, 1.0, 2.0};
    std::vector<double> scales{8.0, 16.0, 32.0};
    double feature_stride = 16.0;

    void validate() const;
};

/// |ratios| * |scales| anchors centred at (base_size / 2, base_size / 2),
/// ratios-major. Anchor (r, s) has h = base * s * sqrt(r), w = base * s / sqrt(r).
std::vector<Box> generate_anchor_base(const AnchorConfig& cfg);

/// Base anchors shifted by (i * stride, j * stride) for each cell of a
/// (grid_height, grid_width) feature map, cells row-major.
std::vector<Box> enumerate_shifted_anchors(std::span<const Box> base, double feature_stride,
                                           std::size_t grid_height, std::size_t grid_width);

struct FeatureMapSpec {
    std::size_t grid = 1;
    double step = 1.0;
    double min_size = 1.0;  // s_k
    double max_size = 2.0;  // s_{k+1}
    std::vector<double> aspect_ratios;
};

struct DefaultBoxConfig {
    double image_size = 300.0;
    std::vector<FeatureMapSpec> feature_maps;

    void validate() const;
};

/// The six-map 300-pixel configuration (8732 boxes).
DefaultBoxConfig ssd300_default_box_config();

/// Default boxes in pixel coordinates. Per cell, row-major: a square of side
/// s_k, a square of side sqrt(s_k * s_{k+1}), then for each aspect ratio a
/// the pair (s_k / sqrt(a), s_k * sqrt(a)) and its transpose.
std::vector<Box> generate_default_boxes(const DefaultBoxConfig& cfg);

// ---------------------------------------------------------------------------
// Offset coding
// ---------------------------------------------------------------------------

/// Applies offsets to reference boxes. dh and dw are clamped to
/// [-size_clip, size_clip] before exponentiation.
std::vector<Box> loc2bbox(std::span<const Box> src, std::span<const Loc> loc,
                          double size_clip = kDefaultLocClip);

/// Exact inverse of loc2bbox. Throws std::invalid_argument on zero-size boxes.
std::vector<Loc> bbox2loc(std::span<const Box> src, std::span<const Box> dst);

Box clip_box(const Box& b, ImageSize size) noexcept;

/// Numerically stable softmax of one row.
std::vector<double> softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct ProposalParams {
    std::size_t n_pre_nms = 6000;
    std::size_t n_post_nms = 300;
    double nms_thresh = 0.7;
    double min_size = 16.0;

    void validate() const;
};

/// Region proposals from anchors: decode, clip, drop boxes smaller than
/// min_size on either side, keep the top n_pre_nms by objectness, NMS, keep
/// the top n_post_nms. Objectness is carried as the output scores.
BBoxSet rpn_proposals(std::span<const Box> anchors, std::span<const double> objectness,
                      std::span<const Loc> locs, ImageSize image_size, const ProposalParams& p);

/// Raw head outputs for one image.
///
/// locs has one row per reference box; a row holds a single Loc (SSD) or one
/// Loc per class including background (Faster R-CNN head). confs rows are
/// class logits, index 0 = background.
struct RawDetectorOutput {
    std::vector<std::vector<Loc>> locs;
    std::vector<std::vector<double>> confs;

    std::size_t n_boxes() const noexcept { return confs.size(); }
    std::size_t n_class() const noexcept { return confs.empty() ? 0 : confs.front().size(); }
    std::size_t n_fg_class() const noexcept { return n_class() == 0 ? 0 : n_class() - 1; }
};

struct Variances {
    double center = 0.1;
    double size = 0.2;
};

/// SSD multibox decoding. Output boxes are clipped to image_size, classes
/// are concatenated in ascending order with 0-based foreground labels, and
/// every score is strictly above score_thresh.
BBoxSet multibox_decode(const RawDetectorOutput& raw, std::span<const Box> defaults, Variances variances,
                        double score_thresh, double nms_thresh, ImageSize image_size);

struct LocNormalization {
    std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, 4> std{0.1, 0.1, 0.2, 0.2};
};

/// Faster R-CNN head decoding of per-class offsets against RoIs.
BBoxSet frcnn_head_decode(std::span<const Box> rois, const RawDetectorOutput& raw,
                          const LocNormalization& norm, double score_thresh, double nms_thresh,
                          ImageSize image_size);

// ---------------------------------------------------------------------------
// Common predict interface
// ---------------------------------------------------------------------------

/// Everything a decoder needs for one image.
struct DecodeInput {
    RawDetectorOutput raw;
    ImageSize image_size;
    /// Faster R-CNN: regions of interest, one per raw row.
    std::optional<std::vector<Box>> rois;
};

/// A configured decode stage. Implementations must be safe to call
/// concurrently.
class DetectionDecoder {
public:
    virtual ~DetectionDecoder() = default;
    virtual BBoxSet decode(const DecodeInput& input) const = 0;
};

class SsdDecoder final : public DetectionDecoder {
public:
    SsdDecoder(DefaultBoxConfig cfg, Variances variances, double score_thresh, double nms_thresh);

    /// Decodes in the square network frame, then rescales to input.image_size.
    BBoxSet decode(const DecodeInput& input) const override;

    const std::vector<Box>& default_boxes() const noexcept { return defaults_; }

private:
    DefaultBoxConfig cfg_;
    std::vector<Box> defaults_;
    Variances variances_;
    double score_thresh_;
    double nms_thresh_;
};

class FasterRcnnDecoder final : public DetectionDecoder {
public:
    FasterRcnnDecoder(LocNormalization norm, double score_thresh, double nms_thresh);

    /// Requires input.rois.
    BBoxSet decode(const DecodeInput& input) const override;

private:
    LocNormalization norm_;
    double score_thresh_;
    double nms_thresh_;
};

/// Decodes every image with `decoder`; output order matches input order and
/// each result depends only on its own input. threads == 0 picks a default.
std::vector<BBoxSet> predict(const DetectionDecoder& decoder, std::span<const DecodeInput> inputs,
                             unsigned threads = 1);

}  // namespace cvkit
