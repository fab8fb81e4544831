#pragma once

// Test-only reference implementations. They intentionally share no code with
// the library: each one follows the textbook definition as directly as
// possible and is quadratic or worse.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

namespace cvkit::oracle {

struct RefBox {
    double y0, x0, y1, x1;
};

inline double overlap_1d(double a0, double a1, double b0, double b1)
{
    const double lo = a0 > b0 ? a0 : b0;
    const double hi = a1 < b1 ? a1 : b1;
    return hi > lo ? hi - lo : 0.0;
}

inline double ref_iou(const RefBox& a, const RefBox& b)
{
    const double inter = overlap_1d(a.y0, a.y1, b.y0, b.y1) * overlap_1d(a.x0, a.x1, b.x0, b.x1);
    const double area_a = (a.y1 - a.y0) * (a.x1 - a.x0);
    const double area_b = (b.y1 - b.y0) * (b.x1 - b.x0);
    const double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

/// Repeatedly picks the best remaining candidate (highest score, lowest
/// index), keeps it, and deletes every remaining candidate overlapping it
/// at IoU >= thresh.
inline std::vector<std::size_t> greedy_nms(const std::vector<RefBox>& boxes, const std::vector<double>& scores,
                                           double thresh)
{
    std::vector<bool> alive(boxes.size(), true);
    std::vector<std::size_t> kept;
    for (;;) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (!alive[i]) continue;
            if (!best || scores[i] > scores[*best]) best = i;
        }
        if (!best) break;
        kept.push_back(*best);
        alive[*best] = false;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (alive[i] && ref_iou(boxes[*best], boxes[i]) >= thresh) alive[i] = false;
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Detection AP
// ---------------------------------------------------------------------------

struct RefDet {
    RefBox box;
    int label;
    double score;
};

struct RefGt {
    RefBox box;
    int label;
    bool difficult;
};

struct RefImage {
    std::vector<RefDet> pred;
    std::vector<RefGt> gt;
};

struct RefClassResult {
    std::optional<double> voc07;
    std::optional<double> area;
};

/// Full evaluation by definition: per image and class, visit predictions
/// by score (stable), match each to the best unused same-class gt at
/// IoU >= thresh; difficult matches are dropped. Pool, sort, accumulate, and
/// evaluate both AP variants from the raw precision/recall points.
inline std::map<int, RefClassResult> evaluate(const std::vector<RefImage>& images, double thresh)
{
    struct Entry {
        double score;
        bool tp;
        std::size_t seq;
    };
    std::map<int, std::vector<Entry>> pooled;
    std::map<int, int> positives;
    std::size_t seq = 0;

    for (const auto& im : images) {
        for (const auto& g : im.gt) {
            positives[g.label] += g.difficult ? 0 : 1;
        }
        // selection sort by score, stable on ties
        std::vector<bool> visited(im.pred.size(), false);
        std::vector<bool> used(im.gt.size(), false);
        for (std::size_t step = 0; step < im.pred.size(); ++step) {
            std::optional<std::size_t> p;
            for (std::size_t i = 0; i < im.pred.size(); ++i) {
                if (!visited[i] && (!p || im.pred[i].score > im.pred[*p].score)) p = i;
            }
            visited[*p] = true;
            const auto& det = im.pred[*p];
            positives[det.label] += 0;

            std::optional<std::size_t> best;
            double best_iou = 0.0;
            for (std::size_t g = 0; g < im.gt.size(); ++g) {
                if (used[g] || im.gt[g].label != det.label) continue;
                const double v = ref_iou(det.box, im.gt[g].box);
                if (!best || v > best_iou) {
                    best = g;
                    best_iou = v;
                }
            }
            if (best && best_iou >= thresh) {
                used[*best] = true;
                if (im.gt[*best].difficult) continue;  // ignored
                pooled[det.label].push_back({det.score, true, seq++});
            } else {
                pooled[det.label].push_back({det.score, false, seq++});
            }
        }
    }

    std::map<int, RefClassResult> out;
    for (const auto& [label, npos] : positives) {
        auto entries = pooled[label];
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.seq < b.seq;
        });
        if (npos == 0) {
            out[label] = {};
            continue;
        }
        std::vector<double> prec;
        std::vector<double> rec;
        int tp = 0;
        int n = 0;
        for (const auto& e : entries) {
            ++n;
            tp += e.tp ? 1 : 0;
            prec.push_back(static_cast<double>(tp) / n);
            rec.push_back(static_cast<double>(tp) / npos);
        }

        // 11-point: best precision among points with recall >= t.
        double sum = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const double t = k / 10.0;
            double best = 0.0;
            for (std::size_t i = 0; i < rec.size(); ++i) {
                if (rec[i] >= t && prec[i] > best) best = prec[i];
            }
            sum += best;
        }

        // Area: integrate p_interp(r) = max{prec_i : rec_i >= r} over r in
        // (0, 1] by splitting at every distinct recall value.
        std::vector<double> cuts(rec.begin(), rec.end());
        cuts.push_back(0.0);
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double area = 0.0;
        for (std::size_t k = 1; k < cuts.size(); ++k) {
            // p_interp is constant on (cuts[k-1], cuts[k]]
            double best = 0.0;
            for (std::size_t i = 0; i < rec.size(); ++i) {
                if (rec[i] >= cuts[k] && prec[i] > best) best = prec[i];
            }
            area += (cuts[k] - cuts[k - 1]) * best;
        }
        out[label] = {sum / 11.0, area};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

struct RefSegScores {
    double pixel_accuracy;
    double mean_class_accuracy;
    double mean_iou;
};

/// Per-pixel enumeration: for each class count gt pixels, predicted pixels,
/// and agreements directly from the maps.
inline RefSegScores segmentation(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& gts,
                                 int n_class)
{
    long long correct = 0;
    long long total = 0;
    std::vector<long long> gt_count(n_class, 0);
    std::vector<long long> pred_count(n_class, 0);
    std::vector<long long> agree(n_class, 0);
    for (std::size_t m = 0; m < preds.size(); ++m) {
        for (std::size_t i = 0; i < preds[m].size(); ++i) {
            const int g = gts[m][i];
            const int p = preds[m][i];
            if (g < 0) continue;
            ++total;
            ++gt_count[g];
            ++pred_count[p];
            if (g == p) {
                ++correct;
                ++agree[g];
            }
        }
    }
    double acc = 0.0;
    int acc_n = 0;
    double iou = 0.0;
    int iou_n = 0;
    for (int c = 0; c < n_class; ++c) {
        if (gt_count[c] > 0) {
            acc += static_cast<double>(agree[c]) / gt_count[c];
            ++acc_n;
        }
        const long long uni = gt_count[c] + pred_count[c] - agree[c];
        if (uni > 0) {
            iou += static_cast<double>(agree[c]) / uni;
            ++iou_n;
        }
    }
    return {static_cast<double>(correct) / total, acc / acc_n, iou / iou_n};
}

}  // namespace cvkit::oracle
