#include "cvkit/detection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cvkit/parallel.hpp"
#include "cvkit/transforms.hpp"

namespace cvkit {

namespace {

void check_thresh(double thresh, const char* who)
{
    if (!(thresh > 0.0 && thresh <= 1.0)) {
        throw std::invalid_argument(std::string(who) + ": threshold must be in (0, 1]");
    }
}

// Stable descending order by score.
std::vector<std::size_t> order_by_score(std::span<const double> scores)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

void check_raw_shape(const RawDetectorOutput& raw, std::size_t n_ref, std::size_t locs_per_row,
                     const char* who)
{
    const std::string prefix(who);
    if (raw.confs.size() != n_ref || raw.locs.size() != n_ref) {
        throw std::invalid_argument(prefix + ": expected " + std::to_string(n_ref) + " rows, got " +
                                    std::to_string(raw.locs.size()) + " loc rows and " +
                                    std::to_string(raw.confs.size()) + " conf rows");
    }
    const std::size_t width = raw.n_class();
    if (n_ref > 0 && width < 2) {
        throw std::invalid_argument(prefix + ": conf rows need background plus at least one class");
    }
    for (std::size_t i = 0; i < n_ref; ++i) {
        if (raw.confs[i].size() != width) {
            throw std::invalid_argument(prefix + ": conf row " + std::to_string(i) + " has inconsistent width");
        }
        for (double v : raw.confs[i]) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument(prefix + ": non-finite conf in row " + std::to_string(i));
            }
        }
        const std::size_t expected = locs_per_row == 0 ? width : locs_per_row;
        if (raw.locs[i].size() != expected) {
            throw std::invalid_argument(prefix + ": loc row " + std::to_string(i) + " has " +
                                        std::to_string(raw.locs[i].size()) + " offsets, expected " +
                                        std::to_string(expected));
        }
    }
}

// Per-class threshold + NMS over already decoded, clipped boxes. probs[i]
// is the softmax row of box i; boxes_of(i, c) gives the box for class c.
template <typename BoxesOf>
BBoxSet per_class_nms(const std::vector<std::vector<double>>& probs, std::size_t n_class, BoxesOf boxes_of,
                      double score_thresh, double nms_thresh)
{
    std::vector<Box> out_boxes;
    std::vector<int> out_labels;
    std::vector<double> out_scores;
    std::vector<Box> cand_boxes;
    std::vector<double> cand_scores;
    for (std::size_t c = 1; c < n_class; ++c) {
        cand_boxes.clear();
        cand_scores.clear();
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i][c] > score_thresh) {
                cand_boxes.push_back(boxes_of(i, c));
                cand_scores.push_back(probs[i][c]);
            }
        }
        const auto keep = non_maximum_suppression(cand_boxes, std::span<const double>(cand_scores), nms_thresh);
        for (std::size_t k : keep) {
            out_boxes.push_back(cand_boxes[k]);
            out_labels.push_back(static_cast<int>(c - 1));
            out_scores.push_back(cand_scores[k]);
        }
    }
    return BBoxSet(std::move(out_boxes), std::move(out_labels), std::move(out_scores));
}

}  // namespace

double iou(const Box& a, const Box& b) noexcept
{
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double inter = (ih > 0.0 && iw > 0.0) ? ih * iw : 0.0;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

Matrix bbox_iou(std::span<const Box> a, std::span<const Box> b)
{
    Matrix m{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) m.values[i * b.size() + j] = iou(a[i], b[j]);
    }
    return m;
}

Matrix bbox_iou(const BBoxSet& a, const BBoxSet& b)
{
    return bbox_iou(std::span<const Box>(a.boxes()), std::span<const Box>(b.boxes()));
}

std::vector<std::size_t> non_maximum_suppression(std::span<const Box> boxes,
                                                 std::optional<std::span<const double>> scores,
                                                 double thresh, std::optional<std::size_t> limit)
{
    check_thresh(thresh, "non_maximum_suppression");
    if (scores && scores->size() != boxes.size()) {
        throw std::invalid_argument("non_maximum_suppression: one score per box required");
    }
    std::vector<std::size_t> order;
    if (scores) {
        order = order_by_score(*scores);
    } else {
        order.resize(boxes.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
    }

    const std::size_t cap = limit.value_or(boxes.size());
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        if (kept.size() >= cap) break;
        bool keep = true;
        for (std::size_t k : kept) {
            if (iou(boxes[i], boxes[k]) >= thresh) {
                keep = false;
                break;
            }
        }
        if (keep) kept.push_back(i);
    }
    return kept;
}

std::vector<std::size_t> non_maximum_suppression(const BBoxSet& b, double thresh, std::optional<std::size_t> limit)
{
    std::optional<std::span<const double>> scores;
    if (b.scores()) scores = std::span<const double>(*b.scores());
    return non_maximum_suppression(std::span<const Box>(b.boxes()), scores, thresh, limit);
}

void AnchorConfig::validate() const
{
    if (ratios.empty() || scales.empty()) throw std::invalid_argument("anchor config: ratios and scales must be non-empty");
    if (!(base_size > 0.0) || !(feature_stride > 0.0)) {
        throw std::invalid_argument("anchor config: base_size and feature_stride must be positive");
    }
    for (double r : ratios) {
        if (!(r > 0.0)) throw std::invalid_argument("anchor config: ratios must be positive");
    }
    for (double s : scales) {
        if (!(s > 0.0)) throw std::invalid_argument("anchor config: scales must be positive");
    }
}

std::vector<Box> generate_anchor_base(const AnchorConfig& cfg)
{
    cfg.validate();
    const double c = cfg.base_size / 2.0;
    std::vector<Box> out;
    out.reserve(cfg.ratios.size() * cfg.scales.size());
    for (double r : cfg.ratios) {
        for (double s : cfg.scales) {
            const double h = cfg.base_size * s * std::sqrt(r);
            const double w = cfg.base_size * s / std::sqrt(r);
            out.push_back({c - h / 2.0, c - w / 2.0, c + h / 2.0, c + w / 2.0});
        }
    }
    return out;
}

std::vector<Box> enumerate_shifted_anchors(std::span<const Box> base, double feature_stride,
                                           std::size_t grid_height, std::size_t grid_width)
{
    std::vector<Box> out;
    out.reserve(grid_height * grid_width * base.size());
    for (std::size_t i = 0; i < grid_height; ++i) {
        const double dy = static_cast<double>(i) * feature_stride;
        for (std::size_t j = 0; j < grid_width; ++j) {
            const double dx = static_cast<double>(j) * feature_stride;
            for (const Box& a : base) out.push_back({a.y_min + dy, a.x_min + dx, a.y_max + dy, a.x_max + dx});
        }
    }
    return out;
}

void DefaultBoxConfig::validate() const
{
    if (!(image_size > 0.0)) throw std::invalid_argument("default box config: image_size must be positive");
    for (std::size_t k = 0; k < feature_maps.size(); ++k) {
        const auto& m = feature_maps[k];
        const std::string where = "default box config: feature map " + std::to_string(k);
        if (m.grid < 1) throw std::invalid_argument(where + ": grid must be >= 1");
        if (!(m.step > 0.0)) throw std::invalid_argument(where + ": step must be positive");
        // s_{k+1} may exceed image_size; the standard 300 layout uses 315.
        if (!(m.min_size > 0.0 && m.min_size < m.max_size)) {
            throw std::invalid_argument(where + ": need 0 < min_size < max_size");
        }
        for (double a : m.aspect_ratios) {
            if (!(a > 0.0)) throw std::invalid_argument(where + ": aspect ratios must be positive");
        }
    }
}

DefaultBoxConfig ssd300_default_box_config()
{
    DefaultBoxConfig cfg;
    cfg.image_size = 300.0;
    const std::size_t grids[] = {38, 19, 10, 5, 3, 1};
    const double steps[] = {8, 16, 32, 64, 100, 300};
    const double sizes[] = {30, 60, 111, 162, 213, 264, 315};
    const std::vector<double> ratios[] = {{2}, {2, 3}, {2, 3}, {2, 3}, {2}, {2}};
    for (std::size_t k = 0; k < 6; ++k) {
        cfg.feature_maps.push_back({grids[k], steps[k], sizes[k], sizes[k + 1], ratios[k]});
    }
    return cfg;
}

std::vector<Box> generate_default_boxes(const DefaultBoxConfig& cfg)
{
    cfg.validate();
    std::vector<Box> out;
    auto centered = [&out](double cy, double cx, double h, double w) {
        out.push_back({cy - h / 2.0, cx - w / 2.0, cy + h / 2.0, cx + w / 2.0});
    };
    for (const auto& m : cfg.feature_maps) {
        const double s = m.min_size;
        const double s_prime = std::sqrt(m.min_size * m.max_size);
        for (std::size_t i = 0; i < m.grid; ++i) {
            const double cy = (static_cast<double>(i) + 0.5) * m.step;
            for (std::size_t j = 0; j < m.grid; ++j) {
                const double cx = (static_cast<double>(j) + 0.5) * m.step;
                centered(cy, cx, s, s);
                centered(cy, cx, s_prime, s_prime);
                for (double a : m.aspect_ratios) {
                    const double r = std::sqrt(a);
                    centered(cy, cx, s / r, s * r);
                    centered(cy, cx, s * r, s / r);
                }
            }
        }
    }
    return out;
}

std::vector<Box> loc2bbox(std::span<const Box> src, std::span<const Loc> loc, double size_clip)
{
    if (src.size() != loc.size()) {
        throw std::invalid_argument("loc2bbox: " + std::to_string(src.size()) + " boxes but " +
                                    std::to_string(loc.size()) + " offsets");
    }
    std::vector<Box> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Box& s = src[i];
        const Loc& t = loc[i];
        const double h = s.height();
        const double w = s.width();
        const double cy = s.y_min + 0.5 * h;
        const double cx = s.x_min + 0.5 * w;

        const double ncy = t.dy * h + cy;
        const double ncx = t.dx * w + cx;
        const double nh = h * std::exp(std::clamp(t.dh, -size_clip, size_clip));
        const double nw = w * std::exp(std::clamp(t.dw, -size_clip, size_clip));
        out[i] = {ncy - 0.5 * nh, ncx - 0.5 * nw, ncy + 0.5 * nh, ncx + 0.5 * nw};
    }
    return out;
}

std::vector<Loc> bbox2loc(std::span<const Box> src, std::span<const Box> dst)
{
    if (src.size() != dst.size()) {
        throw std::invalid_argument("bbox2loc: " + std::to_string(src.size()) + " source boxes but " +
                                    std::to_string(dst.size()) + " targets");
    }
    std::vector<Loc> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Box& s = src[i];
        const Box& d = dst[i];
        if (!(s.height() > 0.0 && s.width() > 0.0)) {
            throw std::invalid_argument("bbox2loc: source box " + std::to_string(i) + " has zero size");
        }
        if (!(d.height() > 0.0 && d.width() > 0.0)) {
            throw std::invalid_argument("bbox2loc: target box " + std::to_string(i) + " has zero size");
        }
        const double cy = s.y_min + 0.5 * s.height();
        const double cx = s.x_min + 0.5 * s.width();
        const double dcy = d.y_min + 0.5 * d.height();
        const double dcx = d.x_min + 0.5 * d.width();
        out[i] = {(dcy - cy) / s.height(), (dcx - cx) / s.width(), std::log(d.height() / s.height()),
                  std::log(d.width() / s.width())};
    }
    return out;
}

Box clip_box(const Box& b, ImageSize size) noexcept
{
    const auto h = static_cast<double>(size.height);
    const auto w = static_cast<double>(size.width);
    return {std::clamp(b.y_min, 0.0, h), std::clamp(b.x_min, 0.0, w), std::clamp(b.y_max, 0.0, h),
            std::clamp(b.x_max, 0.0, w)};
}

std::vector<double> softmax(std::span<const double> logits)
{
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

void ProposalParams::validate() const
{
    if (n_post_nms > n_pre_nms) throw std::invalid_argument("proposal params: n_post_nms > n_pre_nms");
    check_thresh(nms_thresh, "proposal params");
    if (!(min_size >= 0.0)) throw std::invalid_argument("proposal params: min_size must be >= 0");
}

BBoxSet rpn_proposals(std::span<const Box> anchors, std::span<const double> objectness,
                      std::span<const Loc> locs, ImageSize image_size, const ProposalParams& p)
{
    p.validate();
    if (anchors.size() != objectness.size() || anchors.size() != locs.size()) {
        throw std::invalid_argument("rpn_proposals: anchors, objectness and locs must have equal lengths");
    }
    const auto decoded = loc2bbox(anchors, locs);

    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        const Box b = clip_box(decoded[i], image_size);
        if (b.height() < p.min_size || b.width() < p.min_size) continue;
        boxes.push_back(b);
        scores.push_back(objectness[i]);
    }

    auto order = order_by_score(scores);
    if (order.size() > p.n_pre_nms) order.resize(p.n_pre_nms);
    std::vector<Box> top_boxes;
    std::vector<double> top_scores;
    top_boxes.reserve(order.size());
    top_scores.reserve(order.size());
    for (std::size_t i : order) {
        top_boxes.push_back(boxes[i]);
        top_scores.push_back(scores[i]);
    }

    const auto keep =
        non_maximum_suppression(top_boxes, std::span<const double>(top_scores), p.nms_thresh, p.n_post_nms);
    std::vector<Box> out_boxes;
    std::vector<double> out_scores;
    for (std::size_t k : keep) {
        out_boxes.push_back(top_boxes[k]);
        out_scores.push_back(top_scores[k]);
    }
    return BBoxSet(std::move(out_boxes), std::nullopt, std::move(out_scores));
}

BBoxSet multibox_decode(const RawDetectorOutput& raw, std::span<const Box> defaults, Variances variances,
                        double score_thresh, double nms_thresh, ImageSize image_size)
{
    check_raw_shape(raw, defaults.size(), 1, "multibox_decode");
    check_thresh(nms_thresh, "multibox_decode");

    std::vector<Loc> scaled(defaults.size());
    for (std::size_t i = 0; i < defaults.size(); ++i) {
        const Loc& t = raw.locs[i][0];
        scaled[i] = {t.dy * variances.center, t.dx * variances.center, t.dh * variances.size,
                     t.dw * variances.size};
    }
    auto decoded = loc2bbox(defaults, scaled);
    for (Box& b : decoded) b = clip_box(b, image_size);

    std::vector<std::vector<double>> probs(raw.confs.size());
    for (std::size_t i = 0; i < raw.confs.size(); ++i) probs[i] = softmax(raw.confs[i]);

    return per_class_nms(
        probs, raw.n_class(), [&](std::size_t i, std::size_t) { return decoded[i]; }, score_thresh, nms_thresh);
}

BBoxSet frcnn_head_decode(std::span<const Box> rois, const RawDetectorOutput& raw, const LocNormalization& norm,
                          double score_thresh, double nms_thresh, ImageSize image_size)
{
    check_raw_shape(raw, rois.size(), 0, "frcnn_head_decode");
    check_thresh(nms_thresh, "frcnn_head_decode");
    const std::size_t n_class = raw.n_class();

    // decoded[c][i]: roi i decoded with its class-c offsets
    std::vector<std::vector<Box>> decoded(n_class);
    for (std::size_t c = 1; c < n_class; ++c) {
        std::vector<Loc> locs(rois.size());
        for (std::size_t i = 0; i < rois.size(); ++i) {
            const Loc& t = raw.locs[i][c];
            locs[i] = {t.dy * norm.std[0] + norm.mean[0], t.dx * norm.std[1] + norm.mean[1],
                       t.dh * norm.std[2] + norm.mean[2], t.dw * norm.std[3] + norm.mean[3]};
        }
        decoded[c] = loc2bbox(rois, locs);
        for (Box& b : decoded[c]) b = clip_box(b, image_size);
    }

    std::vector<std::vector<double>> probs(raw.confs.size());
    for (std::size_t i = 0; i < raw.confs.size(); ++i) probs[i] = softmax(raw.confs[i]);

    return per_class_nms(
        probs, n_class, [&](std::size_t i, std::size_t c) { return decoded[c][i]; }, score_thresh, nms_thresh);
}

SsdDecoder::SsdDecoder(DefaultBoxConfig cfg, Variances variances, double score_thresh, double nms_thresh)
    : cfg_(std::move(cfg)),
      defaults_(generate_default_boxes(cfg_)),
      variances_(variances),
      score_thresh_(score_thresh),
      nms_thresh_(nms_thresh)
{
    check_thresh(nms_thresh_, "SsdDecoder");
}

BBoxSet SsdDecoder::decode(const DecodeInput& input) const
{
    const auto side = static_cast<std::size_t>(std::lround(cfg_.image_size));
    const ImageSize frame{side, side};
    BBoxSet out = multibox_decode(input.raw, defaults_, variances_, score_thresh_, nms_thresh_, frame);
    if (input.image_size == frame) return out;
    return resize_bbox(out, frame, input.image_size);
}

FasterRcnnDecoder::FasterRcnnDecoder(LocNormalization norm, double score_thresh, double nms_thresh)
    : norm_(norm), score_thresh_(score_thresh), nms_thresh_(nms_thresh)
{
    check_thresh(nms_thresh_, "FasterRcnnDecoder");
}

BBoxSet FasterRcnnDecoder::decode(const DecodeInput& input) const
{
    if (!input.rois) throw std::invalid_argument("FasterRcnnDecoder: input has no rois");
    return frcnn_head_decode(*input.rois, input.raw, norm_, score_thresh_, nms_thresh_, input.image_size);
}

std::vector<BBoxSet> predict(const DetectionDecoder& decoder, std::span<const DecodeInput> inputs, unsigned threads)
{
    std::vector<BBoxSet> out(inputs.size());
    parallel_for(inputs.size(), threads, [&](std::size_t i) { out[i] = decoder.decode(inputs[i]); });
    return out;
}

}  // namespace cvkit
