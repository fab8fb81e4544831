#include "cvkit/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cvkit/png_io.hpp"
#include "json.hpp"

namespace cvkit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& what) { throw FormatError(what); }

const json& require(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) bad(std::string("missing ") + key);
    return *it;
}

double as_real(const json& v, const char* what)
{
    if (!v.is_number()) bad(std::string(what) + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const char* what)
{
    if (!v.is_number_integer()) bad(std::string(what) + " must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        bad(std::string(what) + " out of range");
    }
    return static_cast<int>(i);
}

std::size_t as_count(const json& v, const char* what)
{
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        bad(std::string(what) + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

const json& as_array(const json& v, const char* what)
{
    if (!v.is_array()) bad(std::string(what) + " must be an array");
    return v;
}

Box parse_box(const json& v)
{
    if (!v.is_array() || v.size() != 4) bad("each box must be a list of 4 numbers");
    return {as_real(v[0], "box coordinate"), as_real(v[1], "box coordinate"), as_real(v[2], "box coordinate"),
            as_real(v[3], "box coordinate")};
}

std::vector<Box> parse_boxes(const json& v, const char* what)
{
    std::vector<Box> out;
    for (const auto& b : as_array(v, what)) out.push_back(parse_box(b));
    return out;
}

ordered_json box_json(const Box& b) { return ordered_json::array({b.y_min, b.x_min, b.y_max, b.x_max}); }

std::vector<Loc> parse_loc_row(const json& row, const char* what)
{
    as_array(row, what);
    if (row.size() % 4 != 0 || row.empty()) bad(std::string(what) + " rows must hold a positive multiple of 4 reals");
    std::vector<Loc> out(row.size() / 4);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = {as_real(row[4 * k], what), as_real(row[4 * k + 1], what), as_real(row[4 * k + 2], what),
                  as_real(row[4 * k + 3], what)};
    }
    return out;
}

ordered_json loc_row_json(const std::vector<Loc>& row)
{
    auto out = ordered_json::array();
    for (const Loc& l : row) {
        out.push_back(l.dy);
        out.push_back(l.dx);
        out.push_back(l.dh);
        out.push_back(l.dw);
    }
    return out;
}

RawOutputRecord parse_raw_record(const json& obj)
{
    if (!obj.is_object()) bad("raw output record must be a JSON object");
    RawOutputRecord r;
    const auto& id = require(obj, "image_id");
    if (!id.is_string()) bad("image_id must be a string");
    r.image_id = id.get<std::string>();

    // From here on, errors name the image.
    try {
        const auto& size = require(obj, "image_size");
        if (!size.is_array() || size.size() != 2) bad("image_size must be [height, width]");
        r.image_size = {as_count(size[0], "image_size"), as_count(size[1], "image_size")};
        if (r.image_size.height == 0 || r.image_size.width == 0) bad("image_size must be positive");

        for (const auto& row : as_array(require(obj, "confs"), "confs")) {
            std::vector<double> c;
            for (const auto& v : as_array(row, "confs row")) c.push_back(as_real(v, "conf"));
            r.output.confs.push_back(std::move(c));
        }
        for (const auto& row : as_array(require(obj, "locs"), "locs")) {
            r.output.locs.push_back(parse_loc_row(row, "locs"));
        }
        if (auto it = obj.find("rois"); it != obj.end()) r.rois = parse_boxes(*it, "rois");
        if (auto it = obj.find("rpn"); it != obj.end()) {
            if (!it->is_object()) bad("rpn must be an object");
            RpnOutput rpn;
            const auto& grid = require(*it, "feature_size");
            if (!grid.is_array() || grid.size() != 2) bad("rpn.feature_size must be [height, width]");
            rpn.feature_height = as_count(grid[0], "rpn.feature_size");
            rpn.feature_width = as_count(grid[1], "rpn.feature_size");
            for (const auto& row : as_array(require(*it, "locs"), "rpn.locs")) {
                auto l = parse_loc_row(row, "rpn.locs");
                if (l.size() != 1) bad("rpn.locs rows must hold exactly 4 reals");
                rpn.locs.push_back(l[0]);
            }
            for (const auto& v : as_array(require(*it, "objectness"), "rpn.objectness")) {
                rpn.objectness.push_back(as_real(v, "rpn.objectness"));
            }
            if (rpn.locs.size() != rpn.objectness.size()) bad("rpn.locs and rpn.objectness lengths differ");
            r.rpn = std::move(rpn);
        }

        const auto& confs = r.output.confs;
        const auto& locs = r.output.locs;
        if (locs.size() != confs.size()) {
            bad("locs has " + std::to_string(locs.size()) + " rows but confs has " + std::to_string(confs.size()));
        }
        const std::size_t width = r.output.n_class();
        for (const auto& row : confs) {
            if (row.size() != width) bad("confs rows differ in width");
        }
        if (!confs.empty() && width < 2) bad("confs rows need background plus at least one class");
        for (const auto& row : locs) {
            if (row.size() != locs.front().size()) bad("locs rows differ in width");
        }
        if (!locs.empty() && locs.front().size() != 1 && locs.front().size() != width) {
            bad("locs rows must hold 4 or 4 * (conf width) reals");
        }
        if (r.rois && r.rois->size() != confs.size()) {
            bad("rois has " + std::to_string(r.rois->size()) + " boxes but confs has " +
                std::to_string(confs.size()) + " rows");
        }
    } catch (const FormatError& e) {
        bad("image " + r.image_id + ": " + e.what());
    }
    return r;
}

ordered_json raw_record_json(const RawOutputRecord& r)
{
    ordered_json j;
    j["image_id"] = r.image_id;
    j["image_size"] = {r.image_size.height, r.image_size.width};
    auto locs = ordered_json::array();
    for (const auto& row : r.output.locs) locs.push_back(loc_row_json(row));
    j["locs"] = std::move(locs);
    j["confs"] = r.output.confs;
    if (r.rois) {
        auto rois = ordered_json::array();
        for (const Box& b : *r.rois) rois.push_back(box_json(b));
        j["rois"] = std::move(rois);
    }
    if (r.rpn) {
        ordered_json rpn;
        rpn["feature_size"] = {r.rpn->feature_height, r.rpn->feature_width};
        auto locs_rpn = ordered_json::array();
        for (const Loc& l : r.rpn->locs) locs_rpn.push_back(loc_row_json({l}));
        rpn["locs"] = std::move(locs_rpn);
        rpn["objectness"] = r.rpn->objectness;
        j["rpn"] = std::move(rpn);
    }
    return j;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) bad(path.string() + ": cannot open");
    return in;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    return out;
}

SegMap label_map_from_bytes(std::size_t h, std::size_t w, const std::vector<std::uint8_t>& bytes)
{
    std::vector<std::int32_t> data(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) data[i] = bytes[i] == 255 ? SegMap::kIgnore : bytes[i];
    return SegMap(h, w, std::move(data));
}

class DetectionDirectoryDataset final : public Dataset<DetectionSample> {
public:
    DetectionDirectoryDataset(std::vector<DetectionRecord> records, std::vector<fs::path> images)
        : records_(std::move(records)), images_(std::move(images))
    {
    }

    std::size_t size() const override { return records_.size(); }

    DetectionSample get(std::size_t i) const override
    {
        check_index(i);
        const auto& r = records_[i];
        std::vector<bool> difficult = r.difficult.value_or(std::vector<bool>(r.boxes.size(), false));
        return {read_png_rgb(images_[i]), BBoxSet(r.boxes, r.labels), std::move(difficult)};
    }

private:
    std::vector<DetectionRecord> records_;
    std::vector<fs::path> images_;
};

class SegmentationDirectoryDataset final : public Dataset<SegmentationSample> {
public:
    SegmentationDirectoryDataset(std::vector<fs::path> images, std::vector<fs::path> labels)
        : images_(std::move(images)), labels_(std::move(labels))
    {
    }

    std::size_t size() const override { return images_.size(); }

    SegmentationSample get(std::size_t i) const override
    {
        check_index(i);
        ImageTensor image = read_png_rgb(images_[i]);
        SegMap label = read_label_png(labels_[i]);
        if (image.size() != label.size()) {
            bad(labels_[i].string() + ": label size differs from image size");
        }
        return {std::move(image), std::move(label)};
    }

private:
    std::vector<fs::path> images_;
    std::vector<fs::path> labels_;
};

}  // namespace

BBoxSet DetectionRecord::bbox() const
{
    return BBoxSet(boxes, labels, scores);
}

DetectionRecord parse_detection_record(const std::string& line)
{
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) bad("record must be a JSON object");

    DetectionRecord r;
    const auto& id = require(obj, "image_id");
    if (!id.is_string()) bad("image_id must be a string");
    r.image_id = id.get<std::string>();
    r.boxes = parse_boxes(require(obj, "boxes"), "boxes");
    for (const auto& v : as_array(require(obj, "labels"), "labels")) {
        const int label = as_int(v, "label");
        if (label < 0) bad("labels must be >= 0");
        r.labels.push_back(label);
    }
    if (r.labels.size() != r.boxes.size()) {
        bad("image " + r.image_id + ": " + std::to_string(r.boxes.size()) + " boxes but " +
            std::to_string(r.labels.size()) + " labels");
    }
    if (auto it = obj.find("scores"); it != obj.end() && !it->is_null()) {
        r.scores.emplace();
        for (const auto& v : as_array(*it, "scores")) r.scores->push_back(as_real(v, "score"));
        if (r.scores->size() != r.boxes.size()) bad("image " + r.image_id + ": scores length differs from boxes");
    }
    if (auto it = obj.find("difficult"); it != obj.end() && !it->is_null()) {
        r.difficult.emplace();
        for (const auto& v : as_array(*it, "difficult")) {
            if (!v.is_boolean()) bad("difficult flags must be booleans");
            r.difficult->push_back(v.get<bool>());
        }
        if (r.difficult->size() != r.boxes.size()) {
            bad("image " + r.image_id + ": difficult length differs from boxes");
        }
    }
    return r;
}

std::string format_detection_record(const DetectionRecord& r)
{
    ordered_json j;
    j["image_id"] = r.image_id;
    auto boxes = ordered_json::array();
    for (const Box& b : r.boxes) boxes.push_back(box_json(b));
    j["boxes"] = std::move(boxes);
    j["labels"] = r.labels;
    if (r.scores) j["scores"] = *r.scores;
    if (r.difficult) j["difficult"] = *r.difficult;
    return j.dump();
}

std::vector<DetectionRecord> read_detections(std::istream& in, const std::string& source)
{
    std::vector<DetectionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_detection_record(line));
        } catch (const FormatError& e) {
            bad(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<DetectionRecord> read_detections(const fs::path& path)
{
    auto in = open_in(path);
    return read_detections(in, path.string());
}

void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records)
{
    for (const auto& r : records) out << format_detection_record(r) << '\n';
}

void write_detections(const fs::path& path, const std::vector<DetectionRecord>& records)
{
    auto out = open_out(path);
    write_detections(out, records);
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<RawOutputRecord> read_raw_outputs(std::istream& in, const std::string& source)
{
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::vector<RawOutputRecord> out;

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return out;
    if (text[first] == '[') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            bad(source + ": malformed JSON: " + e.what());
        }
        for (std::size_t i = 0; i < doc.size(); ++i) {
            try {
                out.push_back(parse_raw_record(doc[i]));
            } catch (const FormatError& e) {
                bad(source + ": record " + std::to_string(i) + ": " + e.what());
            }
        }
        return out;
    }

    // A single pretty-printed record.
    if (const json doc = json::parse(text, nullptr, false); !doc.is_discarded() && doc.is_object()) {
        try {
            out.push_back(parse_raw_record(doc));
        } catch (const FormatError& e) {
            bad(source + ": " + e.what());
        }
        return out;
    }

    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                bad(std::string("malformed JSON: ") + e.what());
            }
            out.push_back(parse_raw_record(obj));
        } catch (const FormatError& e) {
            bad(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<RawOutputRecord> read_raw_outputs(const fs::path& path)
{
    auto in = open_in(path);
    return read_raw_outputs(in, path.string());
}

void write_raw_outputs(const fs::path& path, const std::vector<RawOutputRecord>& records)
{
    auto out = open_out(path);
    for (const auto& r : records) out << raw_record_json(r).dump() << '\n';
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<std::string> png_stems(const fs::path& dir)
{
    if (!fs::is_directory(dir)) bad(dir.string() + ": not a directory");
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    return stems;
}

SegMap read_label_png(const fs::path& path)
{
    std::size_t h = 0;
    std::size_t w = 0;
    const auto bytes = read_png_gray(path, h, w);
    return label_map_from_bytes(h, w, bytes);
}

void write_label_png(const fs::path& path, const SegMap& m)
{
    std::vector<std::uint8_t> bytes(m.data().size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const auto v = m.data()[i];
        if (v > 254) throw std::invalid_argument("write_label_png: class value " + std::to_string(v) + " exceeds 254");
        bytes[i] = v == SegMap::kIgnore ? 255 : static_cast<std::uint8_t>(v);
    }
    write_png_gray(path, m.height(), m.width(), bytes);
}

DatasetPtr<DetectionSample> open_detection_dataset(const fs::path& root)
{
    const fs::path annotations = root / "annotations.jsonl";
    const fs::path image_dir = root / "images";
    auto records = read_detections(annotations);

    std::set<std::string> seen;
    std::vector<fs::path> images;
    images.reserve(records.size());
    for (const auto& r : records) {
        if (!seen.insert(r.image_id).second) bad(annotations.string() + ": duplicate image_id " + r.image_id);
        fs::path image = image_dir / (r.image_id + ".png");
        if (!fs::is_regular_file(image)) bad(annotations.string() + ": no image file for " + r.image_id);
        read_png_header(image);
        images.push_back(std::move(image));
    }
    return std::make_shared<DetectionDirectoryDataset>(std::move(records), std::move(images));
}

DatasetPtr<SegmentationSample> open_segmentation_dataset(const fs::path& root)
{
    const fs::path image_dir = root / "images";
    const fs::path label_dir = root / "labels";
    const auto image_stems = png_stems(image_dir);
    const auto label_stems = png_stems(label_dir);

    std::vector<std::string> unmatched;
    std::set_symmetric_difference(image_stems.begin(), image_stems.end(), label_stems.begin(), label_stems.end(),
                                  std::back_inserter(unmatched));
    if (!unmatched.empty()) {
        std::string msg = root.string() + ": unmatched stems:";
        for (const auto& s : unmatched) msg += " " + s;
        throw ConsistencyError(msg, std::move(unmatched));
    }

    std::vector<fs::path> images;
    std::vector<fs::path> labels;
    for (const auto& stem : image_stems) {
        images.push_back(image_dir / (stem + ".png"));
        labels.push_back(label_dir / (stem + ".png"));
        read_png_header(images.back());
        const PngHeader h = read_png_header(labels.back());
        if (h.color || h.colormap) bad(labels.back().string() + ": label image is not grayscale");
    }
    return std::make_shared<SegmentationDirectoryDataset>(std::move(images), std::move(labels));
}

}  // namespace cvkit
