#pragma once

// Random evaluation instances expressed both as library inputs and as
// oracle inputs.

#include <algorithm>
#include <random>
#include <vector>

#include "cvkit/evaluation.hpp"
#include "oracles.hpp"

namespace cvkit::test {

struct DetectionInstance {
    std::vector<BBoxSet> pred;
    std::vector<DetectionGroundTruth> gt;
    std::vector<oracle::RefImage> ref;
};

/// Small clustered scenes so that overlaps near the threshold are common.
/// Scores are drawn from a coarse grid to exercise ties.
inline DetectionInstance random_detection_instance(std::mt19937_64& rng, int max_images, int max_pred,
                                                   int max_gt, int n_class, bool with_difficult = true)
{
    std::uniform_int_distribution<int> n_img(1, max_images);
    std::uniform_int_distribution<int> n_pred(0, max_pred);
    std::uniform_int_distribution<int> n_gt(0, max_gt);
    std::uniform_int_distribution<int> label(0, n_class - 1);
    std::uniform_real_distribution<double> pos(0, 30);
    std::uniform_real_distribution<double> len(4, 20);
    std::uniform_real_distribution<double> jitter(-4, 4);
    std::uniform_int_distribution<int> score(0, 20);
    std::bernoulli_distribution difficult(0.15);
    std::bernoulli_distribution near_gt(0.7);

    DetectionInstance inst;
    const int images = n_img(rng);
    for (int m = 0; m < images; ++m) {
        std::vector<Box> gboxes;
        std::vector<int> glabels;
        std::vector<bool> gdiff;
        oracle::RefImage ref;
        const int ng = n_gt(rng);
        for (int g = 0; g < ng; ++g) {
            const double y = pos(rng), x = pos(rng);
            const Box b{y, x, y + len(rng), x + len(rng)};
            gboxes.push_back(b);
            glabels.push_back(label(rng));
            gdiff.push_back(with_difficult && difficult(rng));
            ref.gt.push_back({{b.y_min, b.x_min, b.y_max, b.x_max}, glabels.back(), gdiff.back()});
        }
        std::vector<Box> pboxes;
        std::vector<int> plabels;
        std::vector<double> pscores;
        const int np = n_pred(rng);
        for (int p = 0; p < np; ++p) {
            Box b;
            int l;
            if (!gboxes.empty() && near_gt(rng)) {
                const auto k = rng() % gboxes.size();
                const Box& g = gboxes[k];
                b = {g.y_min + jitter(rng), g.x_min + jitter(rng), g.y_max + jitter(rng), g.x_max + jitter(rng)};
                if (b.y_max <= b.y_min) b.y_max = b.y_min + 1;
                if (b.x_max <= b.x_min) b.x_max = b.x_min + 1;
                l = std::bernoulli_distribution(0.85)(rng) ? glabels[k] : label(rng);
            } else {
                const double y = pos(rng), x = pos(rng);
                b = {y, x, y + len(rng), x + len(rng)};
                l = label(rng);
            }
            const double s = score(rng) / 20.0;
            pboxes.push_back(b);
            plabels.push_back(l);
            pscores.push_back(s);
            ref.pred.push_back({{b.y_min, b.x_min, b.y_max, b.x_max}, l, s});
        }
        inst.pred.emplace_back(pboxes, plabels, pscores);
        DetectionGroundTruth g{BBoxSet(gboxes, glabels), std::nullopt};
        if (with_difficult) g.difficult = gdiff;
        inst.gt.push_back(std::move(g));
        inst.ref.push_back(std::move(ref));
    }
    return inst;
}

struct SegmentationInstance {
    std::vector<SegMap> pred;
    std::vector<SegMap> gt;
    std::vector<std::vector<int>> ref_pred;
    std::vector<std::vector<int>> ref_gt;
};

inline SegmentationInstance random_segmentation_instance(std::mt19937_64& rng, int n_maps, int n_class, int max_dim = 24)
{
    SegmentationInstance inst;
    std::uniform_int_distribution<int> dim(1, max_dim);
    std::uniform_int_distribution<int> cls(0, n_class - 1);
    std::bernoulli_distribution ignore(0.1);
    std::bernoulli_distribution agree(0.6);
    for (int m = 0; m < n_maps; ++m) {
        const auto h = static_cast<std::size_t>(dim(rng));
        const auto w = static_cast<std::size_t>(dim(rng));
        std::vector<std::int32_t> p(h * w), g(h * w);
        for (std::size_t i = 0; i < h * w; ++i) {
            g[i] = ignore(rng) ? -1 : cls(rng);
            p[i] = (g[i] >= 0 && agree(rng)) ? g[i] : cls(rng);
        }
        inst.ref_pred.emplace_back(p.begin(), p.end());
        inst.ref_gt.emplace_back(g.begin(), g.end());
        inst.pred.emplace_back(h, w, std::move(p));
        inst.gt.emplace_back(h, w, std::move(g));
    }
    // guarantee at least one counted pixel
    if (std::all_of(inst.ref_gt.begin(), inst.ref_gt.end(),
                    [](const auto& g) { return std::all_of(g.begin(), g.end(), [](int v) { return v < 0; }); })) {
        return random_segmentation_instance(rng, n_maps, n_class, max_dim);
    }
    return inst;
}

}  // namespace cvkit::test
