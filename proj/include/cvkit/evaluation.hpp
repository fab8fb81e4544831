#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cvkit/types.hpp"

namespace cvkit {

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

struct DetectionGroundTruth {
    BBoxSet bbox;  // labels required
    std::optional<std::vector<bool>> difficult;

    bool is_difficult(std::size_t i) const { return difficult && (*difficult)[i]; }
};

enum class MatchFlag : std::uint8_t { kTruePositive, kFalsePositive, kIgnored };

/// Matched predictions of one class, pooled over images in image order and,
/// within an image, in descending score order.
struct ClassMatches {
    std::vector<double> scores;
    std::vector<MatchFlag> flags;
    std::size_t n_positive = 0;
};

using MatchResult = std::map<int, ClassMatches>;

/// Greedy one-to-one matching per image and class.
///
/// Predictions are visited by descending score (ties by input order). Each
/// one takes the not-yet-matched gt of its class with the highest IoU (ties
/// by gt index) if that IoU >= iou_thresh: a difficult gt makes it ignored,
/// any other gt a true positive. Otherwise it is a false positive.
/// n_positive counts non-difficult gt boxes. threads == 0 picks a default.
MatchResult match_detections(const std::vector<BBoxSet>& pred, const std::vector<DetectionGroundTruth>& gt,
                             double iou_thresh = 0.5, unsigned threads = 1);

struct ClassCurve {
    std::vector<double> precision;
    std::optional<std::vector<double>> recall;  // nullopt when n_positive == 0
};

using PRCurve = std::map<int, ClassCurve>;

/// Cumulative precision/recall per class over the pooled, score-sorted
/// predictions. Ignored predictions are dropped.
PRCurve precision_recall(const MatchResult& matches);

enum class ApMode { kVoc07, kArea };

std::optional<ApMode> parse_ap_mode(const std::string& name);
const char* ap_mode_name(ApMode mode);

/// AP of one class curve; nullopt when recall is undefined.
///
/// kVoc07 averages the best precision at recall >= t over
/// t = 0, 0.1, ..., 1. kArea integrates the monotone precision envelope.
std::optional<double> average_precision(const ClassCurve& curve, ApMode mode);
std::map<int, std::optional<double>> average_precision(const PRCurve& curve, ApMode mode);

struct DetectionEvalResult {
    std::map<int, std::optional<double>> ap;
    std::optional<double> map;  // mean of defined APs; nullopt if none
};

/// Positional overload: pred[i] and gt[i] describe the same image.
DetectionEvalResult eval_detection_voc(const std::vector<BBoxSet>& pred, const std::vector<DetectionGroundTruth>& gt,
                                       double iou_thresh = 0.5, ApMode mode = ApMode::kVoc07, unsigned threads = 1);

/// Keyed by image id. Throws ConsistencyError listing the symmetric
/// difference when the id sets differ.
DetectionEvalResult eval_detection_voc(const std::map<std::string, BBoxSet>& pred,
                                       const std::map<std::string, DetectionGroundTruth>& gt,
                                       double iou_thresh = 0.5, ApMode mode = ApMode::kVoc07, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_class);

    std::size_t n_class() const noexcept { return n_class_; }
    std::uint64_t operator()(std::size_t gt, std::size_t pred) const { return counts_[gt * n_class_ + pred]; }
    void add(std::size_t gt, std::size_t pred, std::uint64_t count = 1) { counts_[gt * n_class_ + pred] += count; }
    std::uint64_t total() const noexcept;

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t n_class_;
    std::vector<std::uint64_t> counts_;
};

/// Pixels with gt == -1 are skipped. Throws std::invalid_argument on shape
/// mismatch or out-of-range values.
ConfusionMatrix confusion_matrix(const SegMap& pred, const SegMap& gt, std::size_t n_class);

struct SegmentationScores {
    double pixel_accuracy = 0.0;
    double mean_class_accuracy = 0.0;
    double mean_iou = 0.0;
    std::vector<std::optional<double>> class_accuracy;
    std::vector<std::optional<double>> iou;
};

/// Throws std::invalid_argument on an all-zero matrix.
SegmentationScores segmentation_scores(const ConfusionMatrix& m);

}  // namespace cvkit
