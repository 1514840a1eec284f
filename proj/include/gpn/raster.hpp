#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gpn/anchors.hpp"
#include "gpn/common.hpp"
#include "gpn/geometry.hpp"
#include "gpn/rng.hpp"

namespace gpn {

/// Scored localization on one image.
struct Detection {
    Ellipse ellipse;
    double score;
    std::string image_id;

    Detection(Ellipse e, double score_, std::string image_id_ = "")
        : ellipse(e), score(score_), image_id(std::move(image_id_)) {
        if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
            throw invalid_input("detection score must be in [0, 1]");
        }
    }
};

/// Square-cell sampling lattice. Cell (ix, iy) has its center at
/// origin + ((ix + 0.5) cell, (iy + 0.5) cell).
struct RasterGrid {
    Vec2 origin;
    double cell = 1.0;
    int width = 0;
    int height = 0;

    Vec2 cell_center(int ix, int iy) const {
        return {origin.x + (ix + 0.5) * cell, origin.y + (iy + 0.5) * cell};
    }
};

struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, 0 or 1

    int popcount() const {
        return static_cast<int>(
            std::accumulate(data.begin(), data.end(), 0));
    }
};

/// Marks every cell whose center lies inside the ellipse (quadratic form
/// <= 1); no partial-coverage anti-aliasing.
inline Mask rasterize_ellipse(const Ellipse& e, const RasterGrid& grid) {
    if (!(grid.cell > 0.0) || !std::isfinite(grid.cell) || grid.width <= 0 ||
        grid.height <= 0) {
        throw invalid_input("raster grid must have positive cell and extent");
    }
    Mask m;
    m.width = grid.width;
    m.height = grid.height;
    m.data.assign(static_cast<size_t>(grid.width) * grid.height, 0);
    // Restrict the scan to the cells the ellipse bbox can touch.
    const Box bb = ellipse_bbox(e);
    const int ix0 = std::max(
        0, static_cast<int>(std::floor((bb.x0() - grid.origin.x) / grid.cell)));
    const int ix1 = std::min(
        grid.width - 1,
        static_cast<int>(std::ceil((bb.x1() - grid.origin.x) / grid.cell)));
    const int iy0 = std::max(
        0, static_cast<int>(std::floor((bb.y0() - grid.origin.y) / grid.cell)));
    const int iy1 = std::min(
        grid.height - 1,
        static_cast<int>(std::ceil((bb.y1() - grid.origin.y) / grid.cell)));
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            if (point_in_ellipse(e, grid.cell_center(ix, iy))) {
                m.data[static_cast<size_t>(iy) * grid.width + ix] = 1;
            }
        }
    }
    return m;
}

/// Union bounding box of two boxes.
inline Box union_box(const Box& a, const Box& b) {
    const double x0 = std::min(a.x0(), b.x0());
    const double x1 = std::max(a.x1(), b.x1());
    const double y0 = std::min(a.y0(), b.y0());
    const double y1 = std::max(a.y1(), b.y1());
    return Box(0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0);
}

inline bool boxes_disjoint(const Box& a, const Box& b) {
    return std::min(a.x1(), b.x1()) <= std::max(a.x0(), b.x0()) ||
           std::min(a.y1(), b.y1()) <= std::max(a.y0(), b.y0());
}

/// Grid over the union bbox whose longer side is split into cells_per_axis
/// square cells; the shorter side takes however many cells cover it.
inline RasterGrid make_shared_grid(const Box& bounds, int cells_per_axis) {
    const double longest = std::max(bounds.w, bounds.h);
    RasterGrid g;
    g.cell = longest / cells_per_axis;
    g.origin = {bounds.x0(), bounds.y0()};
    g.width = std::max(
        1, static_cast<int>(std::ceil(bounds.w / g.cell - 1e-9)));
    g.height = std::max(
        1, static_cast<int>(std::ceil(bounds.h / g.cell - 1e-9)));
    return g;
}

/// Rasterized intersection-over-union on a grid shared by both ellipses
/// (shared construction makes the result exactly symmetric). Disjoint
/// bounding boxes short-circuit to exactly 0.
inline double ellipse_iou(const Ellipse& e1, const Ellipse& e2,
                          int cells_per_axis = 256) {
    if (cells_per_axis < 64) {
        throw invalid_input("cells_per_axis must be >= 64");
    }
    const Box b1 = ellipse_bbox(e1);
    const Box b2 = ellipse_bbox(e2);
    if (boxes_disjoint(b1, b2)) return 0.0;
    const RasterGrid grid = make_shared_grid(union_box(b1, b2), cells_per_axis);
    const Mask m1 = rasterize_ellipse(e1, grid);
    const Mask m2 = rasterize_ellipse(e2, grid);
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (size_t i = 0; i < m1.data.size(); ++i) {
        inter += m1.data[i] & m2.data[i];
        uni += m1.data[i] | m2.data[i];
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Monte Carlo IoU estimate with its standard error.
struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
};

/// Uniform sampling over the union bbox; IoU is the ratio of hits in both
/// ellipses to hits in either, with a binomial standard error on that ratio.
inline McEstimate ellipse_iou_mc(const Ellipse& e1, const Ellipse& e2,
                                 int n_samples, std::uint64_t seed) {
    if (n_samples < 10000) {
        throw invalid_input("n_samples must be >= 10000");
    }
    const Box b1 = ellipse_bbox(e1);
    const Box b2 = ellipse_bbox(e2);
    const Box bounds = union_box(b1, b2);
    Rng rng(seed);
    std::int64_t both = 0;
    std::int64_t either = 0;
    for (int i = 0; i < n_samples; ++i) {
        const Vec2 p{bounds.x0() + rng.uniform01() * bounds.w,
                     bounds.y0() + rng.uniform01() * bounds.h};
        const bool in1 = point_in_ellipse(e1, p);
        const bool in2 = point_in_ellipse(e2, p);
        both += in1 && in2;
        either += in1 || in2;
    }
    if (either == 0) return {0.0, 0.0};
    const double p = static_cast<double>(both) / static_cast<double>(either);
    McEstimate out;
    out.value = p;
    out.std_err = std::sqrt(p * (1.0 - p) / static_cast<double>(either));
    return out;
}

enum class NmsMetric {
    box,      // IoU of the tight bounding boxes (the default path)
    ellipse,  // rasterized ellipse IoU (slower, for experiments)
};

/// Greedy non-maximum suppression: walk detections by descending score
/// (earlier input index wins ties) and drop any that overlap an already
/// kept detection on the same image above iou_thresh. Output stays in that
/// order. Detections on different images never suppress each other.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double iou_thresh,
                                  NmsMetric metric = NmsMetric::box,
                                  int cells_per_axis = 256) {
    if (!(iou_thresh > 0.0) || iou_thresh > 1.0) {
        throw invalid_input("iou_thresh must be in (0, 1]");
    }
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].score > dets[b].score;
    });
    std::vector<Box> boxes;
    boxes.reserve(dets.size());
    for (const Detection& d : dets) boxes.push_back(ellipse_bbox(d.ellipse));

    std::vector<Detection> kept;
    std::vector<size_t> kept_idx;
    for (size_t i : order) {
        bool suppressed = false;
        for (size_t j : kept_idx) {
            if (dets[i].image_id != dets[j].image_id) continue;
            const double iou =
                metric == NmsMetric::box
                    ? box_iou(boxes[i], boxes[j])
                    : ellipse_iou(dets[i].ellipse, dets[j].ellipse,
                                  cells_per_axis);
            if (iou > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept.push_back(dets[i]);
            kept_idx.push_back(i);
        }
    }
    return kept;
}

}  // namespace gpn
