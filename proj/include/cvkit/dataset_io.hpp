#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvkit/dataset.hpp"
#include "cvkit/detection.hpp"
#include "cvkit/types.hpp"

namespace cvkit {

// ---------------------------------------------------------------------------
// JSONL detection records
// ---------------------------------------------------------------------------

/// One line of a detections/annotations JSONL file. Keys are written in
/// member order.
struct DetectionRecord {
    std::string image_id;
    std::vector<Box> boxes;
    std::vector<int> labels;
    std::optional<std::vector<double>> scores;
    std::optional<std::vector<bool>> difficult;

    BBoxSet bbox() const;
    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Parses one JSON object. Throws FormatError (without line context).
DetectionRecord parse_detection_record(const std::string& line);
std::string format_detection_record(const DetectionRecord& r);

/// Blank lines are skipped. Errors carry "<source>:<line>: ...".
std::vector<DetectionRecord> read_detections(std::istream& in, const std::string& source = "<stream>");
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records);
void write_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& records);

// ---------------------------------------------------------------------------
// Raw detector outputs
// ---------------------------------------------------------------------------

/// Offsets and class logits for one image, as written by an external model.
///
/// `locs` rows are flat lists of 4 * k reals: k = 1 for per-box offsets,
/// k = conf width for per-class offsets. `rpn` carries region proposal
/// outputs from which RoIs can be regenerated when `rois` is absent.
struct RpnOutput {
    std::size_t feature_height = 0;
    std::size_t feature_width = 0;
    std::vector<Loc> locs;
    std::vector<double> objectness;
};

struct RawOutputRecord {
    std::string image_id;
    ImageSize image_size;
    RawDetectorOutput output;
    std::optional<std::vector<Box>> rois;
    std::optional<RpnOutput> rpn;
};

/// Accepts a JSON array, a single JSON object or JSON Lines. Shapes are checked per record and
/// errors name the image id.
std::vector<RawOutputRecord> read_raw_outputs(std::istream& in, const std::string& source = "<stream>");
std::vector<RawOutputRecord> read_raw_outputs(const std::filesystem::path& path);
/// Writes JSON Lines.
void write_raw_outputs(const std::filesystem::path& path, const std::vector<RawOutputRecord>& records);

// ---------------------------------------------------------------------------
// Directory datasets
// ---------------------------------------------------------------------------

struct DetectionSample {
    ImageTensor image;
    BBoxSet bbox;
    std::vector<bool> difficult;
};

struct SegmentationSample {
    ImageTensor image;
    SegMap label;
};

/// `root/annotations.jsonl` plus `root/images/<image_id>.png`.
///
/// Annotations and PNG headers are validated here; pixel data is decoded
/// on every get(), so a corrupt image body only fails when it is accessed.
DatasetPtr<DetectionSample> open_detection_dataset(const std::filesystem::path& root);

/// `root/images/*.png` paired by stem with `root/labels/*.png`, ascending
/// stem order. Label value 255 maps to -1; other values pass through.
DatasetPtr<SegmentationSample> open_segmentation_dataset(const std::filesystem::path& root);

/// 8-bit grayscale label PNG as a SegMap (255 -> -1).
SegMap read_label_png(const std::filesystem::path& path);
/// Inverse of read_label_png; values must be -1 or in [0, 254].
void write_label_png(const std::filesystem::path& path, const SegMap& m);

/// Sorted stems of `*.png` files in `dir`.
std::vector<std::string> png_stems(const std::filesystem::path& dir);

}  // namespace cvkit
