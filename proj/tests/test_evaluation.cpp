#include "doctest.h"

#include <cmath>
#include <random>

#include "cvkit/evaluation.hpp"
#include "instances.hpp"

using namespace cvkit;

namespace {

DetectionGroundTruth gt_of(std::vector<Box> boxes, std::vector<int> labels, std::vector<bool> difficult = {})
{
    DetectionGroundTruth g{BBoxSet(std::move(boxes), std::move(labels)), std::nullopt};
    if (!difficult.empty()) g.difficult = std::move(difficult);
    return g;
}

using F = MatchFlag;

}  // namespace

TEST_CASE("match_detections")
{
    SUBCASE("perfect predictions")
    {
        const auto g = gt_of({{0, 0, 10, 10}, {20, 20, 30, 30}}, {0, 1});
        const BBoxSet p(g.bbox.boxes(), std::vector<int>{0, 1}, std::vector<double>{0.5, 0.6});
        const auto m = match_detections({p}, {g}, 0.5);
        REQUIRE(m.size() == 2);
        CHECK(m.at(0).flags == std::vector<F>{F::kTruePositive});
        CHECK(m.at(1).flags == std::vector<F>{F::kTruePositive});
        CHECK(m.at(0).n_positive == 1);
        CHECK(m.at(1).n_positive == 1);
    }
    SUBCASE("duplicate predictions on one gt")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet p({{0, 0, 10, 9}, {0, 0, 10, 10}}, std::vector<int>{0, 0}, std::vector<double>{0.8, 0.9});
        const auto m = match_detections({p}, {g}, 0.5);
        CHECK(m.at(0).scores == std::vector<double>{0.9, 0.8});
        CHECK(m.at(0).flags == std::vector<F>{F::kTruePositive, F::kFalsePositive});
    }
    SUBCASE("difficult gt")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0}, {true});
        const BBoxSet p({{0, 0, 10, 10}, {0, 0, 10, 10}}, std::vector<int>{0, 0}, std::vector<double>{0.9, 0.8});
        const auto m = match_detections({p}, {g}, 0.5);
        CHECK(m.at(0).n_positive == 0);
        CHECK(m.at(0).flags == std::vector<F>{F::kIgnored, F::kFalsePositive});
    }
    SUBCASE("label mismatch is a false positive")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet p({{0, 0, 10, 10}}, std::vector<int>{1}, std::vector<double>{0.9});
        const auto m = match_detections({p}, {g}, 0.5);
        CHECK(m.at(1).flags == std::vector<F>{F::kFalsePositive});
        CHECK(m.at(1).n_positive == 0);
        CHECK(m.at(0).flags.empty());
        CHECK(m.at(0).n_positive == 1);
    }
    SUBCASE("errors")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet no_scores({{0, 0, 10, 10}}, std::vector<int>{0});
        CHECK_THROWS_AS(match_detections({no_scores}, {g}, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(match_detections({}, {g}, 0.5), std::invalid_argument);
        DetectionGroundTruth bad = g;
        bad.difficult = std::vector<bool>{true, false};
        const BBoxSet p({{0, 0, 10, 10}}, std::vector<int>{0}, std::vector<double>{0.9});
        CHECK_THROWS_AS(match_detections({p}, {bad}, 0.5), std::invalid_argument);
    }
}

TEST_CASE("precision_recall and average_precision")
{
    SUBCASE("single true positive")
    {
        MatchResult m{{0, {{0.9}, {F::kTruePositive}, 1}}};
        const auto c = precision_recall(m);
        CHECK(c.at(0).precision == std::vector<double>{1.0});
        CHECK(*c.at(0).recall == std::vector<double>{1.0});
        CHECK(*average_precision(c.at(0), ApMode::kVoc07) == 1.0);
        CHECK(*average_precision(c.at(0), ApMode::kArea) == 1.0);
    }
    SUBCASE("false positive then true positive")
    {
        MatchResult m{{0, {{0.8, 0.9}, {F::kTruePositive, F::kFalsePositive}, 1}}};
        const auto c = precision_recall(m);
        CHECK(c.at(0).precision == std::vector<double>{0.0, 0.5});
        CHECK(*c.at(0).recall == std::vector<double>{0.0, 1.0});
        CHECK(*average_precision(c.at(0), ApMode::kVoc07) == 0.5);
        CHECK(*average_precision(c.at(0), ApMode::kArea) == 0.5);
    }
    SUBCASE("no predictions")
    {
        MatchResult m{{0, {{}, {}, 3}}};
        const auto c = precision_recall(m);
        CHECK(c.at(0).precision.empty());
        CHECK(*average_precision(c.at(0), ApMode::kVoc07) == 0.0);
        CHECK(*average_precision(c.at(0), ApMode::kArea) == 0.0);
    }
    SUBCASE("no positives")
    {
        MatchResult m{{0, {{0.5}, {F::kFalsePositive}, 0}}};
        const auto c = precision_recall(m);
        CHECK_FALSE(c.at(0).recall.has_value());
        CHECK_FALSE(average_precision(c.at(0), ApMode::kArea).has_value());
    }
    SUBCASE("ignored predictions are dropped")
    {
        MatchResult m{{0, {{0.9, 0.8}, {F::kIgnored, F::kTruePositive}, 1}}};
        CHECK(precision_recall(m).at(0).precision == std::vector<double>{1.0});
    }
    SUBCASE("mode names")
    {
        CHECK(parse_ap_mode("voc07") == ApMode::kVoc07);
        CHECK(parse_ap_mode("area") == ApMode::kArea);
        CHECK_FALSE(parse_ap_mode("coco").has_value());
        CHECK(std::string(ap_mode_name(ApMode::kArea)) == "area");
    }
}

TEST_CASE("eval_detection_voc")
{
    SUBCASE("identical predictions")
    {
        const auto g = gt_of({{0, 0, 10, 10}, {5, 5, 25, 25}, {40, 40, 50, 60}}, {0, 2, 2});
        const BBoxSet p(g.bbox.boxes(), std::vector<int>{0, 2, 2}, std::vector<double>{0.3, 0.3, 0.3});
        for (auto mode : {ApMode::kVoc07, ApMode::kArea}) {
            const auto r = eval_detection_voc({p}, {g}, 0.5, mode);
            CHECK(*r.map == 1.0);
        }
    }
    SUBCASE("two-prediction fixture")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet p({{50, 50, 60, 60}, {0, 0, 10, 10}}, std::vector<int>{0, 0}, std::vector<double>{0.9, 0.8});
        CHECK(*eval_detection_voc({p}, {g}, 0.5, ApMode::kVoc07).map == 0.5);
        CHECK(*eval_detection_voc({p}, {g}, 0.5, ApMode::kArea).map == 0.5);
    }
    SUBCASE("undefined classes are excluded from the mean")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet p({{0, 0, 10, 10}, {30, 30, 40, 40}}, std::vector<int>{0, 4}, std::vector<double>{0.9, 0.8});
        const auto r = eval_detection_voc({p}, {g});
        CHECK(*r.ap.at(0) == 1.0);
        CHECK_FALSE(r.ap.at(4).has_value());
        CHECK(*r.map == 1.0);
    }
    SUBCASE("mismatched image ids")
    {
        const auto g = gt_of({{0, 0, 10, 10}}, {0});
        const BBoxSet p({{0, 0, 10, 10}}, std::vector<int>{0}, std::vector<double>{0.9});
        const std::map<std::string, BBoxSet> pred{{"a", p}, {"b", p}};
        const std::map<std::string, DetectionGroundTruth> gt{{"a", g}, {"c", g}};
        try {
            eval_detection_voc(pred, gt);
            FAIL("expected ConsistencyError");
        } catch (const ConsistencyError& e) {
            CHECK(e.items().size() == 2);
            CHECK(std::string(e.what()).find("b") != std::string::npos);
        }
        CHECK_THROWS_AS(eval_detection_voc(pred, gt), std::invalid_argument);
    }
}

TEST_CASE("property: detection AP matches the reference evaluation")
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 300; ++t) {
        const auto inst = test::random_detection_instance(rng, 3, 6, 4, 3);
        const double thresh = t % 2 ? 0.5 : 0.3;
        const auto ref = oracle::evaluate(inst.ref, thresh);
        for (auto mode : {ApMode::kVoc07, ApMode::kArea}) {
            const auto r = eval_detection_voc(inst.pred, inst.gt, thresh, mode);
            for (const auto& [label, expected] : ref) {
                const auto want = mode == ApMode::kVoc07 ? expected.voc07 : expected.area;
                REQUIRE(r.ap.count(label) == 1);
                const auto got = r.ap.at(label);
                CHECK(got.has_value() == want.has_value());
                if (got && want) CHECK(std::abs(*got - *want) <= 1e-9);
                if (got) {
                    CHECK(*got >= 0.0);
                    CHECK(*got <= 1.0);
                }
            }
            if (r.map) {
                CHECK(*r.map >= 0.0);
                CHECK(*r.map <= 1.0);
            }
        }
    }
}

TEST_CASE("property: AP depends only on the score ranking")
{
    std::mt19937_64 rng(22);
    for (int t = 0; t < 100; ++t) {
        const auto inst = test::random_detection_instance(rng, 3, 8, 4, 2);
        std::vector<BBoxSet> warped;
        for (const auto& p : inst.pred) {
            std::vector<double> s = *p.scores();
            for (double& v : s) v = std::exp(3 * v) / 100.0;  // strictly increasing
            warped.emplace_back(p.boxes(), p.labels(), s);
        }
        for (auto mode : {ApMode::kVoc07, ApMode::kArea}) {
            CHECK(eval_detection_voc(inst.pred, inst.gt, 0.5, mode).ap ==
                  eval_detection_voc(warped, inst.gt, 0.5, mode).ap);
        }
    }
}

TEST_CASE("property: matching is one-to-one")
{
    std::mt19937_64 rng(23);
    for (int t = 0; t < 200; ++t) {
        const auto inst = test::random_detection_instance(rng, 2, 10, 3, 2);
        const auto m = match_detections(inst.pred, inst.gt, 0.3);
        for (const auto& [label, cm] : m) {
            std::size_t tp = 0;
            for (auto f : cm.flags) tp += f == F::kTruePositive ? 1 : 0;
            CHECK(tp <= cm.n_positive);
        }
    }
}

TEST_CASE("property: area AP dominates the trapezoid under the envelope")
{
    std::mt19937_64 rng(24);
    for (int t = 0; t < 200; ++t) {
        const auto inst = test::random_detection_instance(rng, 2, 10, 4, 1);
        const auto curves = precision_recall(match_detections(inst.pred, inst.gt, 0.5));
        for (const auto& [label, c] : curves) {
            if (!c.recall || c.precision.empty()) continue;
            std::vector<double> r{0.0};
            std::vector<double> p{c.precision.front()};
            r.insert(r.end(), c.recall->begin(), c.recall->end());
            p.insert(p.end(), c.precision.begin(), c.precision.end());
            for (std::size_t i = p.size() - 1; i-- > 0;) p[i] = std::max(p[i], p[i + 1]);
            double trap = 0.0;
            for (std::size_t i = 1; i < r.size(); ++i) trap += (r[i] - r[i - 1]) * (p[i] + p[i - 1]) / 2;
            CHECK(*average_precision(c, ApMode::kArea) >= trap - 1e-9);
        }
    }
}

TEST_CASE("confusion_matrix")
{
    const SegMap gt(2, 2, {0, 0, 1, 1});
    const SegMap pred(2, 2, {0, 1, 1, 1});
    const auto m = confusion_matrix(pred, gt, 2);
    CHECK(m(0, 0) == 1);
    CHECK(m(0, 1) == 1);
    CHECK(m(1, 0) == 0);
    CHECK(m(1, 1) == 2);

    const auto d = confusion_matrix(gt, gt, 2);
    CHECK(d(0, 0) == 2);
    CHECK(d(1, 1) == 2);
    CHECK(d(0, 1) + d(1, 0) == 0);

    const SegMap ignored(2, 2, {-1, -1, -1, -1});
    CHECK(confusion_matrix(pred, ignored, 2) == ConfusionMatrix(2));

    CHECK_THROWS_AS(confusion_matrix(SegMap(1, 1, {2}), SegMap(1, 1, {0}), 2), std::invalid_argument);
    CHECK_THROWS_AS(confusion_matrix(SegMap(1, 1, {-1}), SegMap(1, 1, {0}), 2), std::invalid_argument);
    CHECK_THROWS_AS(confusion_matrix(SegMap(1, 1, {0}), SegMap(1, 1, {5}), 2), std::invalid_argument);
    CHECK_THROWS_AS(confusion_matrix(SegMap(1, 2, {0, 0}), SegMap(2, 1, {0, 0}), 2), std::invalid_argument);
}

TEST_CASE("segmentation_scores")
{
    ConfusionMatrix m(2);
    m.add(0, 0);
    m.add(0, 1);
    m.add(1, 1, 2);
    const auto s = segmentation_scores(m);
    CHECK(s.pixel_accuracy == 0.75);
    CHECK(s.mean_class_accuracy == 0.75);
    CHECK(s.mean_iou == doctest::Approx(7.0 / 12.0).epsilon(1e-15));

    ConfusionMatrix diag(3);
    diag.add(0, 0, 5);
    diag.add(2, 2, 1);
    const auto d = segmentation_scores(diag);
    CHECK(d.pixel_accuracy == 1.0);
    CHECK(d.mean_class_accuracy == 1.0);
    CHECK(d.mean_iou == 1.0);
    CHECK_FALSE(d.class_accuracy[1].has_value());
    CHECK_FALSE(d.iou[1].has_value());

    CHECK_THROWS_AS(segmentation_scores(ConfusionMatrix(3)), std::invalid_argument);
}

TEST_CASE("property: segmentation metrics match per-pixel enumeration")
{
    std::mt19937_64 rng(25);
    for (int t = 0; t < 100; ++t) {
        const int n_class = 2 + static_cast<int>(rng() % 5);
        const auto inst = test::random_segmentation_instance(rng, 1 + static_cast<int>(rng() % 4), n_class);
        ConfusionMatrix total(n_class);
        std::uint64_t counted = 0;
        for (std::size_t i = 0; i < inst.pred.size(); ++i) {
            const auto m = confusion_matrix(inst.pred[i], inst.gt[i], n_class);
            total += m;
            for (auto v : inst.ref_gt[i]) counted += v >= 0 ? 1 : 0;
            const auto diag = confusion_matrix(inst.pred[i], inst.pred[i], n_class);
            for (int a = 0; a < n_class; ++a)
                for (int b = 0; b < n_class; ++b)
                    if (a != b) CHECK(diag(a, b) == 0);
        }
        CHECK(total.total() == counted);
        const auto got = segmentation_scores(total);
        const auto want = oracle::segmentation(inst.ref_pred, inst.ref_gt, n_class);
        CHECK(std::abs(got.pixel_accuracy - want.pixel_accuracy) <= 1e-12);
        CHECK(std::abs(got.mean_class_accuracy - want.mean_class_accuracy) <= 1e-12);
        CHECK(std::abs(got.mean_iou - want.mean_iou) <= 1e-12);
    }
}

TEST_CASE("threaded matching equals sequential")
{
    std::mt19937_64 rng(26);
    const auto inst = test::random_detection_instance(rng, 40, 10, 5, 4);
    const auto a = eval_detection_voc(inst.pred, inst.gt, 0.5, ApMode::kArea, 1);
    const auto b = eval_detection_voc(inst.pred, inst.gt, 0.5, ApMode::kArea, 8);
    CHECK(a.ap == b.ap);
    CHECK(a.map == b.map);
}
