#include "cvkit/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cvkit/detection.hpp"
#include "cvkit/parallel.hpp"

namespace cvkit {

namespace {

struct ImageMatches {
    std::map<int, ClassMatches> per_class;
};

void check_inputs(const BBoxSet& pred, const DetectionGroundTruth& gt, std::size_t image)
{
    const std::string where = "image " + std::to_string(image) + ": ";
    if (!pred.has_labels()) throw std::invalid_argument(where + "predictions need labels");
    if (!pred.has_scores()) throw std::invalid_argument(where + "predictions need scores");
    if (!gt.bbox.has_labels()) throw std::invalid_argument(where + "ground truth needs labels");
    if (gt.difficult && gt.difficult->size() != gt.bbox.size()) {
        throw std::invalid_argument(where + "difficult flags length does not match ground truth boxes");
    }
}

ImageMatches match_image(const BBoxSet& pred, const DetectionGroundTruth& gt, double iou_thresh)
{
    ImageMatches out;
    const auto& gt_labels = *gt.bbox.labels();
    for (std::size_t g = 0; g < gt.bbox.size(); ++g) {
        auto& cm = out.per_class[gt_labels[g]];
        if (!gt.is_difficult(g)) ++cm.n_positive;
    }

    const auto& labels = *pred.labels();
    const auto& scores = *pred.scores();
    std::vector<std::size_t> order(pred.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<bool> used(gt.bbox.size(), false);
    for (std::size_t p : order) {
        const int label = labels[p];
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gt.bbox.size(); ++g) {
            if (used[g] || gt_labels[g] != label) continue;
            const double v = iou(pred[p], gt.bbox[g]);
            if (v > best_iou) {
                best_iou = v;
                best = g;
            }
        }
        MatchFlag flag = MatchFlag::kFalsePositive;
        if (best && best_iou >= iou_thresh) {
            used[*best] = true;
            flag = gt.is_difficult(*best) ? MatchFlag::kIgnored : MatchFlag::kTruePositive;
        }
        auto& cm = out.per_class[label];
        cm.scores.push_back(scores[p]);
        cm.flags.push_back(flag);
    }
    return out;
}

}  // namespace

MatchResult match_detections(const std::vector<BBoxSet>& pred, const std::vector<DetectionGroundTruth>& gt,
                             double iou_thresh, unsigned threads)
{
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("match_detections: " + std::to_string(pred.size()) + " prediction images but " +
                                    std::to_string(gt.size()) + " ground-truth images");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) check_inputs(pred[i], gt[i], i);

    std::vector<ImageMatches> per_image(pred.size());
    parallel_for(pred.size(), threads, [&](std::size_t i) { per_image[i] = match_image(pred[i], gt[i], iou_thresh); });

    // Reduce in image order so pooled ties keep a fixed order.
    MatchResult result;
    for (const auto& im : per_image) {
        for (const auto& [label, cm] : im.per_class) {
            auto& dst = result[label];
            dst.n_positive += cm.n_positive;
            dst.scores.insert(dst.scores.end(), cm.scores.begin(), cm.scores.end());
            dst.flags.insert(dst.flags.end(), cm.flags.begin(), cm.flags.end());
        }
    }
    return result;
}

PRCurve precision_recall(const MatchResult& matches)
{
    PRCurve out;
    for (const auto& [label, cm] : matches) {
        std::vector<std::size_t> order(cm.scores.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cm.scores[a] > cm.scores[b]; });

        ClassCurve curve;
        std::vector<double> recall;
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (std::size_t i : order) {
            if (cm.flags[i] == MatchFlag::kIgnored) continue;
            if (cm.flags[i] == MatchFlag::kTruePositive) {
                ++tp;
            } else {
                ++fp;
            }
            curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
            if (cm.n_positive > 0) recall.push_back(static_cast<double>(tp) / static_cast<double>(cm.n_positive));
        }
        if (cm.n_positive > 0) curve.recall = std::move(recall);
        out.emplace(label, std::move(curve));
    }
    return out;
}

std::optional<ApMode> parse_ap_mode(const std::string& name)
{
    if (name == "voc07") return ApMode::kVoc07;
    if (name == "area") return ApMode::kArea;
    return std::nullopt;
}

const char* ap_mode_name(ApMode mode)
{
    return mode == ApMode::kVoc07 ? "voc07" : "area";
}

std::optional<double> average_precision(const ClassCurve& curve, ApMode mode)
{
    if (!curve.recall) return std::nullopt;
    const auto& prec = curve.precision;
    const auto& rec = *curve.recall;

    if (mode == ApMode::kVoc07) {
        double sum = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const double t = k / 10.0;
            double p = 0.0;
            for (std::size_t i = 0; i < rec.size(); ++i) {
                if (rec[i] >= t) p = std::max(p, prec[i]);
            }
            sum += p;
        }
        return sum / 11.0;
    }

    // Sentinels at recall 0 and 1, precision envelope from the right.
    std::vector<double> mrec;
    std::vector<double> mpre;
    mrec.reserve(rec.size() + 2);
    mpre.reserve(rec.size() + 2);
    mrec.push_back(0.0);
    mpre.push_back(0.0);
    mrec.insert(mrec.end(), rec.begin(), rec.end());
    mpre.insert(mpre.end(), prec.begin(), prec.end());
    mrec.push_back(1.0);
    mpre.push_back(0.0);
    for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);

    double ap = 0.0;
    for (std::size_t i = 1; i < mrec.size(); ++i) {
        if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
    }
    return ap;
}

std::map<int, std::optional<double>> average_precision(const PRCurve& curve, ApMode mode)
{
    std::map<int, std::optional<double>> out;
    for (const auto& [label, c] : curve) out.emplace(label, average_precision(c, mode));
    return out;
}

DetectionEvalResult eval_detection_voc(const std::vector<BBoxSet>& pred, const std::vector<DetectionGroundTruth>& gt,
                                       double iou_thresh, ApMode mode, unsigned threads)
{
    DetectionEvalResult result;
    result.ap = average_precision(precision_recall(match_detections(pred, gt, iou_thresh, threads)), mode);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [label, ap] : result.ap) {
        if (!ap) continue;
        sum += *ap;
        ++n;
    }
    if (n > 0) result.map = sum / static_cast<double>(n);
    return result;
}

DetectionEvalResult eval_detection_voc(const std::map<std::string, BBoxSet>& pred,
                                       const std::map<std::string, DetectionGroundTruth>& gt, double iou_thresh,
                                       ApMode mode, unsigned threads)
{
    std::vector<std::string> difference;
    auto pi = pred.begin();
    auto gi = gt.begin();
    while (pi != pred.end() || gi != gt.end()) {
        if (gi == gt.end() || (pi != pred.end() && pi->first < gi->first)) {
            difference.push_back(pi++->first);
        } else if (pi == pred.end() || gi->first < pi->first) {
            difference.push_back(gi++->first);
        } else {
            ++pi;
            ++gi;
        }
    }
    if (!difference.empty()) {
        std::string msg = "image id sets differ:";
        for (const auto& id : difference) msg += " " + id;
        throw ConsistencyError(msg, std::move(difference));
    }

    std::vector<BBoxSet> p;
    std::vector<DetectionGroundTruth> g;
    p.reserve(pred.size());
    g.reserve(gt.size());
    for (const auto& [id, b] : pred) p.push_back(b);
    for (const auto& [id, t] : gt) g.push_back(t);
    return eval_detection_voc(p, g, iou_thresh, mode, threads);
}

ConfusionMatrix::ConfusionMatrix(std::size_t n_class) : n_class_(n_class), counts_(n_class * n_class, 0)
{
    if (n_class == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const noexcept
{
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other)
{
    if (other.n_class_ != n_class_) throw std::invalid_argument("confusion matrices differ in class count");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion_matrix(const SegMap& pred, const SegMap& gt, std::size_t n_class)
{
    if (pred.size() != gt.size()) throw std::invalid_argument("confusion_matrix: prediction and label shapes differ");
    ConfusionMatrix m(n_class);
    const auto n = static_cast<std::int64_t>(n_class);
    const auto& p = pred.data();
    const auto& g = gt.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (g[i] >= n) {
            throw std::invalid_argument("confusion_matrix: label value " + std::to_string(g[i]) + " out of range");
        }
        if (p[i] < 0 || p[i] >= n) {
            throw std::invalid_argument("confusion_matrix: predicted value " + std::to_string(p[i]) + " out of range");
        }
        if (g[i] == SegMap::kIgnore) continue;
        m.add(static_cast<std::size_t>(g[i]), static_cast<std::size_t>(p[i]));
    }
    return m;
}

SegmentationScores segmentation_scores(const ConfusionMatrix& m)
{
    const std::uint64_t total = m.total();
    if (total == 0) throw std::invalid_argument("segmentation_scores: confusion matrix is empty");

    const std::size_t n = m.n_class();
    SegmentationScores s;
    s.class_accuracy.resize(n);
    s.iou.resize(n);

    std::uint64_t trace = 0;
    // Ratios are summed in extended precision and rounded once.
    long double acc_sum = 0.0L;
    std::size_t acc_n = 0;
    long double iou_sum = 0.0L;
    std::size_t iou_n = 0;
    for (std::size_t c = 0; c < n; ++c) {
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (std::size_t k = 0; k < n; ++k) {
            row += m(c, k);
            col += m(k, c);
        }
        const std::uint64_t diag = m(c, c);
        trace += diag;
        if (row > 0) {
            const long double a = static_cast<long double>(diag) / static_cast<long double>(row);
            s.class_accuracy[c] = static_cast<double>(a);
            acc_sum += a;
            ++acc_n;
        }
        const std::uint64_t denom = row + col - diag;
        if (denom > 0) {
            const long double v = static_cast<long double>(diag) / static_cast<long double>(denom);
            s.iou[c] = static_cast<double>(v);
            iou_sum += v;
            ++iou_n;
        }
    }
    s.pixel_accuracy = static_cast<double>(trace) / static_cast<double>(total);
    s.mean_class_accuracy = static_cast<double>(acc_sum / static_cast<long double>(acc_n));
    s.mean_iou = static_cast<double>(iou_sum / static_cast<long double>(iou_n));
    return s;
}

}  // namespace cvkit
