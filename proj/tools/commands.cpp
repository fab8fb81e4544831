#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "cvkit/dataset_io.hpp"
#include "cvkit/detection.hpp"
#include "cvkit/evaluation.hpp"
#include "cvkit/parallel.hpp"
#include "cvkit/png_io.hpp"
#include "cvkit/transforms.hpp"
#include "cvkit/visualization.hpp"
#include "json.hpp"

namespace cvkit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMaxListedIds = 20;

std::string percent(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

std::string percent_or_na(const ordered_json& v) { return v.is_null() ? "n/a" : percent(v.get<double>()); }

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

[[noreturn]] void throw_id_mismatch(const std::string& what, std::vector<std::string> ids)
{
    std::string msg = what + " (" + std::to_string(ids.size()) + "):";
    for (std::size_t i = 0; i < ids.size() && i < kMaxListedIds; ++i) msg += " " + ids[i];
    if (ids.size() > kMaxListedIds) msg += " ... and " + std::to_string(ids.size() - kMaxListedIds) + " more";
    throw ConsistencyError(msg, std::move(ids));
}

template <typename T>
std::map<std::string, T> index_by_id(const std::vector<DetectionRecord>& records, const std::string& source,
                                     const std::function<T(const DetectionRecord&)>& convert)
{
    std::map<std::string, T> out;
    for (const auto& r : records) {
        if (!out.emplace(r.image_id, convert(r)).second) {
            throw FormatError(source + ": duplicate image_id " + r.image_id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// eval-detection
// ---------------------------------------------------------------------------

struct EvalDetectionOptions {
    std::string pred;
    std::string gt;
    double iou_thresh = 0.5;
    std::string metric = "voc07";
    std::string json_path;
    unsigned threads = 0;
};

int eval_detection(const EvalDetectionOptions& o, std::ostream& out)
{
    const auto mode = parse_ap_mode(o.metric);
    if (!mode) throw FormatError("unknown metric " + o.metric);

    const auto pred_records = read_detections(fs::path(o.pred));
    const auto gt_records = read_detections(fs::path(o.gt));
    auto pred = index_by_id<BBoxSet>(pred_records, o.pred, [&](const DetectionRecord& r) {
        if (!r.scores) throw FormatError(o.pred + ": image " + r.image_id + " has no scores");
        return r.bbox();
    });
    auto gt = index_by_id<DetectionGroundTruth>(gt_records, o.gt, [](const DetectionRecord& r) {
        return DetectionGroundTruth{BBoxSet(r.boxes, r.labels), r.difficult};
    });

    std::vector<std::string> difference;
    for (const auto& [id, b] : pred) {
        if (!gt.count(id)) difference.push_back(id);
    }
    for (const auto& [id, b] : gt) {
        if (!pred.count(id)) difference.push_back(id);
    }
    std::sort(difference.begin(), difference.end());
    if (!difference.empty()) throw_id_mismatch("image ids differ between predictions and ground truth", difference);

    const auto result = eval_detection_voc(pred, gt, o.iou_thresh, *mode, o.threads);

    ordered_json report;
    report["metric"] = ap_mode_name(*mode);
    report["iou_thresh"] = o.iou_thresh;
    report["n_images"] = gt.size();
    auto per_class = ordered_json::array();
    for (const auto& [label, ap] : result.ap) {
        ordered_json row;
        row["label"] = label;
        row["ap"] = optional_json(ap);
        per_class.push_back(std::move(row));
    }
    report["per_class"] = std::move(per_class);
    report["map"] = optional_json(result.map);

    if (!o.json_path.empty()) write_text_file(o.json_path, report.dump(2) + "\n");

    out << "class  AP\n";
    for (const auto& row : report["per_class"]) {
        out << row["label"].get<int>() << "  " << percent_or_na(row["ap"]) << "\n";
    }
    out << "mAP: " << percent_or_na(report["map"]) << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------------------
// eval-segmentation
// ---------------------------------------------------------------------------

struct EvalSegmentationOptions {
    std::string pred;
    std::string gt;
    std::size_t num_classes = 0;
    std::string json_path;
    unsigned threads = 0;
};

int eval_segmentation(const EvalSegmentationOptions& o, std::ostream& out)
{
    if (o.num_classes == 0) throw FormatError("--num-classes must be >= 1");
    const auto pred_stems = png_stems(o.pred);
    const auto gt_stems = png_stems(o.gt);
    std::vector<std::string> difference;
    std::set_symmetric_difference(pred_stems.begin(), pred_stems.end(), gt_stems.begin(), gt_stems.end(),
                                  std::back_inserter(difference));
    if (!difference.empty()) throw_id_mismatch("file stems differ between prediction and label directories", difference);

    std::vector<std::optional<ConfusionMatrix>> per_image(gt_stems.size());
    parallel_for(gt_stems.size(), o.threads, [&](std::size_t i) {
        const auto& stem = gt_stems[i];
        const SegMap pred = read_label_png(fs::path(o.pred) / (stem + ".png"));
        const SegMap gt = read_label_png(fs::path(o.gt) / (stem + ".png"));
        try {
            per_image[i] = confusion_matrix(pred, gt, o.num_classes);
        } catch (const std::invalid_argument& e) {
            throw FormatError(stem + ": " + e.what());
        }
    });
    ConfusionMatrix total(o.num_classes);
    for (const auto& m : per_image) total += *m;
    if (total.total() == 0) throw FormatError("no labelled pixels to evaluate");
    const auto scores = segmentation_scores(total);

    ordered_json report;
    report["num_classes"] = o.num_classes;
    report["n_images"] = gt_stems.size();
    report["pixel_accuracy"] = scores.pixel_accuracy;
    report["mean_class_accuracy"] = scores.mean_class_accuracy;
    report["mean_iou"] = scores.mean_iou;
    auto per_class = ordered_json::array();
    for (std::size_t c = 0; c < o.num_classes; ++c) {
        ordered_json row;
        row["label"] = c;
        row["class_accuracy"] = optional_json(scores.class_accuracy[c]);
        row["iou"] = optional_json(scores.iou[c]);
        per_class.push_back(std::move(row));
    }
    report["per_class"] = std::move(per_class);
    auto confusion = ordered_json::array();
    for (std::size_t g = 0; g < o.num_classes; ++g) {
        auto row = ordered_json::array();
        for (std::size_t p = 0; p < o.num_classes; ++p) row.push_back(total(g, p));
        confusion.push_back(std::move(row));
    }
    report["confusion"] = std::move(confusion);

    if (!o.json_path.empty()) write_text_file(o.json_path, report.dump(2) + "\n");

    out << "class  accuracy  IoU\n";
    for (const auto& row : report["per_class"]) {
        out << row["label"].get<std::size_t>() << "  " << percent_or_na(row["class_accuracy"]) << "  "
            << percent_or_na(row["iou"]) << "\n";
    }
    out << "pixel accuracy: " << percent(report["pixel_accuracy"].get<double>()) << "\n";
    out << "mean class accuracy: " << percent(report["mean_class_accuracy"].get<double>()) << "\n";
    out << "mean IoU: " << percent(report["mean_iou"].get<double>()) << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------------------
// nms
// ---------------------------------------------------------------------------

struct NmsOptions {
    std::string input;
    double thresh = 0.5;
    std::optional<std::size_t> limit;
};

int nms(const NmsOptions& o, std::ostream& out)
{
    const auto records = read_detections(fs::path(o.input));
    std::vector<DetectionRecord> filtered;
    filtered.reserve(records.size());
    for (const auto& r : records) {
        if (!r.scores) throw FormatError(o.input + ": image " + r.image_id + " has no scores");
        const auto keep = non_maximum_suppression(r.bbox(), o.thresh, o.limit);
        DetectionRecord f;
        f.image_id = r.image_id;
        f.scores.emplace();
        if (r.difficult) f.difficult.emplace();
        for (std::size_t k : keep) {
            f.boxes.push_back(r.boxes[k]);
            f.labels.push_back(r.labels[k]);
            f.scores->push_back((*r.scores)[k]);
            if (r.difficult) f.difficult->push_back((*r.difficult)[k]);
        }
        filtered.push_back(std::move(f));
    }
    write_detections(out, filtered);
    return kSuccess;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeOptions {
    std::string raw;
    std::string arch;
    std::string config;
    double score_thresh = 0.05;
    std::optional<double> nms_thresh;
    std::string out;
    unsigned threads = 0;
};

template <typename T>
T value_or(const json& obj, const char* key, T fallback)
{
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("config: bad value for ") + key);
    }
}

std::array<double, 4> quad(const json& obj, const char* key, std::array<double, 4> fallback)
{
    auto v = value_or<std::vector<double>>(obj, key, {fallback.begin(), fallback.end()});
    if (v.size() != 4) throw FormatError(std::string("config: ") + key + " must hold 4 numbers");
    return {v[0], v[1], v[2], v[3]};
}

std::pair<DefaultBoxConfig, Variances> parse_ssd_config(const json& cfg)
{
    DefaultBoxConfig boxes;
    if (value_or<std::string>(cfg, "preset", "") == "ssd300") {
        boxes = ssd300_default_box_config();
    } else {
        if (!cfg.contains("image_size") || !cfg.contains("feature_maps")) {
            throw FormatError("config: ssd needs image_size and feature_maps (or preset)");
        }
        boxes.image_size = value_or<double>(cfg, "image_size", 0.0);
        const auto& maps = cfg.at("feature_maps");
        if (!maps.is_array()) throw FormatError("config: feature_maps must be an array");
        for (const auto& m : maps) {
            if (!m.is_object()) throw FormatError("config: feature map entries must be objects");
            FeatureMapSpec spec;
            spec.grid = value_or<std::size_t>(m, "grid", 0);
            spec.step = value_or<double>(m, "step", 0.0);
            spec.min_size = value_or<double>(m, "min_size", 0.0);
            spec.max_size = value_or<double>(m, "max_size", 0.0);
            spec.aspect_ratios = value_or<std::vector<double>>(m, "aspect_ratios", {});
            boxes.feature_maps.push_back(std::move(spec));
        }
    }
    try {
        boxes.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    auto var = value_or<std::vector<double>>(cfg, "variances", {0.1, 0.2});
    if (var.size() != 2) throw FormatError("config: variances must hold 2 numbers");
    return {std::move(boxes), Variances{var[0], var[1]}};
}

struct FrcnnConfig {
    LocNormalization norm;
    AnchorConfig anchor;
    ProposalParams proposal;
};

FrcnnConfig parse_frcnn_config(const json& cfg)
{
    FrcnnConfig out;
    if (auto it = cfg.find("loc_normalize"); it != cfg.end()) {
        out.norm.mean = quad(*it, "mean", out.norm.mean);
        out.norm.std = quad(*it, "std", out.norm.std);
    }
    if (auto it = cfg.find("anchor"); it != cfg.end()) {
        out.anchor.base_size = value_or(*it, "base_size", out.anchor.base_size);
        out.anchor.ratios = value_or(*it, "ratios", out.anchor.ratios);
        out.anchor.scales = value_or(*it, "scales", out.anchor.scales);
        out.anchor.feature_stride = value_or(*it, "feature_stride", out.anchor.feature_stride);
    }
    if (auto it = cfg.find("proposal"); it != cfg.end()) {
        out.proposal.n_pre_nms = value_or(*it, "n_pre_nms", out.proposal.n_pre_nms);
        out.proposal.n_post_nms = value_or(*it, "n_post_nms", out.proposal.n_post_nms);
        out.proposal.nms_thresh = value_or(*it, "nms_thresh", out.proposal.nms_thresh);
        out.proposal.min_size = value_or(*it, "min_size", out.proposal.min_size);
    }
    try {
        out.anchor.validate();
        out.proposal.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    return out;
}

// RoIs for the head: given directly, or regenerated from RPN outputs.
std::vector<Box> resolve_rois(const RawOutputRecord& r, const FrcnnConfig& cfg)
{
    if (r.rois) return *r.rois;
    if (!r.rpn) throw FormatError("image " + r.image_id + ": frcnn decode needs rois or rpn outputs");
    const auto base = generate_anchor_base(cfg.anchor);
    const auto anchors = enumerate_shifted_anchors(base, cfg.anchor.feature_stride, r.rpn->feature_height,
                                                   r.rpn->feature_width);
    if (anchors.size() != r.rpn->locs.size()) {
        throw FormatError("image " + r.image_id + ": rpn has " + std::to_string(r.rpn->locs.size()) +
                          " rows but the anchor grid has " + std::to_string(anchors.size()));
    }
    return rpn_proposals(anchors, r.rpn->objectness, r.rpn->locs, r.image_size, cfg.proposal).boxes();
}

int decode(const DecodeOptions& o)
{
    const json cfg = read_json_file(o.config);
    if (!cfg.is_object()) throw FormatError(o.config + ": config must be a JSON object");
    const auto records = read_raw_outputs(fs::path(o.raw));

    std::unique_ptr<DetectionDecoder> decoder;
    std::optional<FrcnnConfig> frcnn;
    if (o.arch == "ssd") {
        auto [boxes, variances] = parse_ssd_config(cfg);
        decoder = std::make_unique<SsdDecoder>(std::move(boxes), variances, o.score_thresh, o.nms_thresh.value_or(0.45));
    } else if (o.arch == "frcnn") {
        frcnn = parse_frcnn_config(cfg);
        decoder = std::make_unique<FasterRcnnDecoder>(frcnn->norm, o.score_thresh, o.nms_thresh.value_or(0.3));
    } else {
        throw FormatError("unknown arch " + o.arch);
    }

    std::vector<DecodeInput> inputs(records.size());
    parallel_for(records.size(), o.threads, [&](std::size_t i) {
        const auto& r = records[i];
        inputs[i].raw = r.output;
        inputs[i].image_size = r.image_size;
        if (frcnn) inputs[i].rois = resolve_rois(r, *frcnn);
    });

    std::vector<BBoxSet> results;
    try {
        results = predict(*decoder, inputs, o.threads);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }

    std::vector<DetectionRecord> detections(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        detections[i].image_id = records[i].image_id;
        detections[i].boxes = results[i].boxes();
        detections[i].labels = results[i].labels().value_or(std::vector<int>{});
        detections[i].scores = results[i].scores().value_or(std::vector<double>{});
    }
    write_detections(fs::path(o.out), detections);
    return kSuccess;
}

// ---------------------------------------------------------------------------
// visualize
// ---------------------------------------------------------------------------

struct VisualizeOptions {
    std::string image;
    std::string boxes;
    std::string segmap;
    std::string names;
    std::string out;
    double alpha = 0.5;
    bool no_score = false;
};

std::vector<std::string> read_names(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open");
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) names.push_back(line);
    }
    if (names.empty()) throw FormatError(path.string() + ": no class names");
    return names;
}

BBoxSet boxes_for_image(const std::vector<DetectionRecord>& records, const std::string& stem,
                        const std::string& source)
{
    if (records.empty()) return {};
    if (records.size() == 1) return records.front().bbox();
    for (const auto& r : records) {
        if (r.image_id == stem) return r.bbox();
    }
    throw FormatError(source + ": no record for image_id " + stem);
}

int visualize(const VisualizeOptions& o)
{
    const ImageTensor img = read_png_rgb(o.image);
    const auto names = read_names(o.names);
    RenderStyle style;
    style.alpha = o.alpha;
    style.draw_score = !o.no_score;

    ImageTensor rendered = img;
    try {
        if (!o.boxes.empty()) {
            if (names.size() > 255) throw FormatError("at most 255 class names are supported for boxes");
            // Foreground labels are 0-based; skip the black background color.
            const auto voc = voc_color_palette(names.size() + 1);
            ColorPalette palette{{voc.colors.begin() + 1, voc.colors.end()}};
            const auto records = read_detections(fs::path(o.boxes));
            rendered = vis_bbox(img, boxes_for_image(records, fs::path(o.image).stem().string(), o.boxes), names,
                                palette, style);
        } else {
            if (names.size() > 256) throw FormatError("at most 256 class names are supported");
            const SegMap m = read_label_png(o.segmap);
            rendered = vis_semantic_segmentation(img, m, voc_color_palette(names.size()), style);
        }
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    write_png_rgb(o.out, rendered);
    return kSuccess;
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

struct FlipOptions {
    std::string image;
    std::string boxes;
    std::uint64_t seed = 0;
    std::string out_prefix;
    bool y_random = false;
};

int transform_flip(const FlipOptions& o, std::ostream& out)
{
    const ImageTensor img = read_png_rgb(o.image);
    const auto records = read_detections(fs::path(o.boxes));

    RandomSource rand(o.seed);
    const auto [flipped, params] = random_flip(img, true, o.y_random, rand);

    std::vector<DetectionRecord> transformed = records;
    for (auto& r : transformed) r.boxes = flip_bbox(BBoxSet(r.boxes), img.size(), params).boxes();

    write_png_rgb(o.out_prefix + ".png", flipped);
    write_detections(fs::path(o.out_prefix + ".jsonl"), transformed);

    ordered_json p;
    p["x_flip"] = params.x_flip;
    p["y_flip"] = params.y_flip;
    out << p.dump() << "\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"cvkit: detection and segmentation pipeline tools", "cvkit"};
    app.require_subcommand(1);
    std::function<int()> action;

    EvalDetectionOptions ed;
    auto* ed_cmd = app.add_subcommand("eval-detection", "PASCAL VOC detection mAP");
    ed_cmd->add_option("--pred", ed.pred, "predicted detections (JSONL)")->required();
    ed_cmd->add_option("--gt", ed.gt, "ground truth (JSONL)")->required();
    ed_cmd->add_option("--iou-thresh", ed.iou_thresh, "IoU for a match")->capture_default_str();
    ed_cmd->add_option("--metric", ed.metric, "voc07 or area")->check(CLI::IsMember({"voc07", "area"}))->capture_default_str();
    ed_cmd->add_option("--json", ed.json_path, "write the JSON report here");
    ed_cmd->add_option("--threads", ed.threads, "worker threads, 0 = all cores");
    ed_cmd->callback([&] { action = [&] { return eval_detection(ed, out); }; });

    EvalSegmentationOptions es;
    auto* es_cmd = app.add_subcommand("eval-segmentation", "pixel accuracy, mean class accuracy, mean IoU");
    es_cmd->add_option("--pred", es.pred, "directory of predicted label PNGs")->required();
    es_cmd->add_option("--gt", es.gt, "directory of ground-truth label PNGs")->required();
    es_cmd->add_option("--num-classes", es.num_classes, "number of classes")->required();
    es_cmd->add_option("--json", es.json_path, "write the JSON report here");
    es_cmd->add_option("--threads", es.threads, "worker threads, 0 = all cores");
    es_cmd->callback([&] { action = [&] { return eval_segmentation(es, out); }; });

    NmsOptions nm;
    std::size_t limit = 0;
    auto* nm_cmd = app.add_subcommand("nms", "non-maximum suppression per record, JSONL on stdout");
    nm_cmd->add_option("--input", nm.input, "detections (JSONL) with scores")->required();
    nm_cmd->add_option("--thresh", nm.thresh, "suppress at IoU >= thresh")->required();
    auto* limit_opt = nm_cmd->add_option("--limit", limit, "keep at most N boxes per record");
    nm_cmd->callback([&] {
        if (limit_opt->count() > 0) nm.limit = limit;
        action = [&] { return nms(nm, out); };
    });

    DecodeOptions de;
    double nms_thresh = 0.0;
    auto* de_cmd = app.add_subcommand("decode", "decode raw detector outputs into detections");
    de_cmd->add_option("--raw", de.raw, "raw outputs (JSON array or JSONL)")->required();
    de_cmd->add_option("--arch", de.arch, "ssd or frcnn")->required()->check(CLI::IsMember({"ssd", "frcnn"}));
    de_cmd->add_option("--config", de.config, "decoder config (JSON)")->required();
    de_cmd->add_option("--score-thresh", de.score_thresh, "minimum class score")->capture_default_str();
    auto* nms_opt = de_cmd->add_option("--nms-thresh", nms_thresh, "per-class NMS IoU (ssd 0.45, frcnn 0.3)");
    de_cmd->add_option("--out", de.out, "output detections (JSONL)")->required();
    de_cmd->add_option("--threads", de.threads, "worker threads, 0 = all cores");
    de_cmd->callback([&] {
        if (nms_opt->count() > 0) de.nms_thresh = nms_thresh;
        action = [&] { return decode(de); };
    });

    VisualizeOptions vi;
    auto* vi_cmd = app.add_subcommand("visualize", "render boxes or a segmentation map over an image");
    vi_cmd->add_option("--image", vi.image, "input PNG")->required();
    auto* boxes_opt = vi_cmd->add_option("--boxes", vi.boxes, "detections (JSONL)");
    auto* segmap_opt = vi_cmd->add_option("--segmap", vi.segmap, "label PNG");
    boxes_opt->excludes(segmap_opt);
    vi_cmd->add_option("--names", vi.names, "class names, one per line")->required();
    vi_cmd->add_option("--out", vi.out, "output PNG")->required();
    vi_cmd->add_option("--alpha", vi.alpha, "segmentation overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    vi_cmd->add_flag("--no-score", vi.no_score, "do not draw score tags");
    vi_cmd->callback([&] {
        if (boxes_opt->count() + segmap_opt->count() != 1) {
            throw CLI::ValidationError("exactly one of --boxes and --segmap is required");
        }
        action = [&] { return visualize(vi); };
    });

    FlipOptions fl;
    auto* tr_cmd = app.add_subcommand("transform", "seeded image + annotation transforms");
    tr_cmd->require_subcommand(1);
    auto* flip_cmd = tr_cmd->add_subcommand("flip", "random horizontal flip of an image and its boxes");
    flip_cmd->add_option("--image", fl.image, "input PNG")->required();
    flip_cmd->add_option("--boxes", fl.boxes, "detections (JSONL)")->required();
    flip_cmd->add_option("--seed", fl.seed, "random seed")->required();
    flip_cmd->add_option("--out-prefix", fl.out_prefix, "writes PREFIX.png and PREFIX.jsonl")->required();
    flip_cmd->add_flag("--y-random", fl.y_random, "also flip vertically at random");
    flip_cmd->callback([&] { action = [&] { return transform_flip(fl, out); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kFormatError;
    }

    try {
        return action ? action() : kFormatError;
    } catch (const ConsistencyError& e) {
        err << "error: " << e.what() << "\n";
        return kConsistencyError;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kFormatError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kFormatError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

}  // namespace cvkit::cli
