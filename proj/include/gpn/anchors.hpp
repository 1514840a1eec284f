#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gpn/common.hpp"
#include "gpn/geometry.hpp"

namespace gpn {

/// Reference box a proposal is expressed against.
struct Anchor {
    double cx;
    double cy;
    double w;
    double h;

    Anchor(double cx_, double cy_, double w_, double h_)
        : cx(cx_), cy(cy_), w(w_), h(h_) {
        require_finite(cx, "anchor cx");
        require_finite(cy, "anchor cy");
        if (!std::isfinite(w) || !std::isfinite(h) || w <= 0.0 || h <= 0.0) {
            throw invalid_input("anchor extents must be positive");
        }
    }

    Box box() const { return Box(cx, cy, w, h); }
};

/// Regression targets relative to an anchor. Offsets are in anchor units,
/// sizes are log ratios of full extents, and the orientation rides through
/// its tangent so the parameter is unbounded.
struct EncodedEllipse {
    double tx = 0.0;
    double ty = 0.0;
    double tw = 0.0;
    double th = 0.0;
    double t_tan = 0.0;
};

// tan(89.5 deg): the tangent target saturates here so near-vertical
// orientations stay finite.
inline const double kTanClamp = std::tan(89.5 * std::numbers::pi / 180.0);

/// One anchor per (cell, scale, ratio), centered on stride cells, iterated
/// rows-then-columns with the scale/ratio combinations innermost.
/// w = scale * sqrt(ratio), h = scale / sqrt(ratio).
inline std::vector<Anchor> generate_anchor_grid(
    double image_w, double image_h, double stride,
    const std::vector<double>& scales, const std::vector<double>& ratios) {
    require_finite(image_w, "image_w");
    require_finite(image_h, "image_h");
    require_finite(stride, "stride");
    if (image_w <= 0.0 || image_h <= 0.0 || stride <= 0.0) {
        throw invalid_input("image extents and stride must be positive");
    }
    if (scales.empty() || ratios.empty()) {
        throw invalid_input("scales and ratios must be non-empty");
    }
    for (double s : scales) {
        if (!std::isfinite(s) || s <= 0.0) {
            throw invalid_input("scales must be positive");
        }
    }
    for (double r : ratios) {
        if (!std::isfinite(r) || r <= 0.0) {
            throw invalid_input("ratios must be positive");
        }
    }
    const int nx = static_cast<int>(std::floor(image_w / stride));
    const int ny = static_cast<int>(std::floor(image_h / stride));
    if (nx == 0 || ny == 0) {
        throw invalid_input("stride larger than the image leaves no cells");
    }
    std::vector<Anchor> anchors;
    anchors.reserve(static_cast<size_t>(nx) * ny * scales.size() *
                    ratios.size());
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double cx = (ix + 0.5) * stride;
            const double cy = (iy + 0.5) * stride;
            for (double scale : scales) {
                for (double ratio : ratios) {
                    const double rs = std::sqrt(ratio);
                    anchors.emplace_back(cx, cy, scale * rs, scale / rs);
                }
            }
        }
    }
    return anchors;
}

/// Encodes a ground-truth ellipse against an anchor:
///   tx = (mu_x - cx) / w,  ty = (mu_y - cy) / h,
///   tw = ln(2 sigma_l / w), th = ln(2 sigma_s / h),
///   t_tan = tan(theta) clamped to +/- tan(89.5 deg).
inline EncodedEllipse encode(const Ellipse& gt, const Anchor& anchor) {
    EncodedEllipse e;
    e.tx = (gt.mu_x - anchor.cx) / anchor.w;
    e.ty = (gt.mu_y - anchor.cy) / anchor.h;
    e.tw = std::log(2.0 * gt.sigma_l / anchor.w);
    e.th = std::log(2.0 * gt.sigma_s / anchor.h);
    e.t_tan = std::clamp(std::tan(gt.theta), -kTanClamp, kTanClamp);
    return e;
}

/// Inverse of encode; theta comes back through atan, so it always lands in
/// the open interval (-pi/2, pi/2).
inline Ellipse decode(const EncodedEllipse& t, const Anchor& anchor) {
    require_finite(t.tx, "tx");
    require_finite(t.ty, "ty");
    require_finite(t.tw, "tw");
    require_finite(t.th, "th");
    require_finite(t.t_tan, "t_tan");
    const double mu_x = anchor.cx + t.tx * anchor.w;
    const double mu_y = anchor.cy + t.ty * anchor.h;
    const double sigma_l = 0.5 * std::exp(t.tw) * anchor.w;
    const double sigma_s = 0.5 * std::exp(t.th) * anchor.h;
    return Ellipse(mu_x, mu_y, sigma_l, sigma_s, std::atan(t.t_tan));
}

/// Intersection-over-union of two axis-aligned boxes.
inline double box_iou(const Box& a, const Box& b) {
    const double iw =
        std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
    const double ih =
        std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

enum class AnchorLabel : std::uint8_t { positive, negative, ignore };

struct AnchorAssignment {
    std::vector<AnchorLabel> labels;  // one per anchor
    std::vector<int> matched_gt;      // gt index for positives, else -1
};

/// Threshold assignment on the IoU between anchor boxes and ellipse bounding
/// boxes: positive at or above hi, negative below lo, ignored between.
/// Every ground truth with any overlap additionally forces its best-IoU
/// anchor positive (lowest anchor index on ties, lowest gt index when an
/// anchor ties across gts).
inline AnchorAssignment assign_anchors(const std::vector<Anchor>& anchors,
                                       const std::vector<Ellipse>& gts,
                                       double hi = 0.7, double lo = 0.3) {
    if (anchors.empty()) {
        throw invalid_input("anchor list must be non-empty");
    }
    if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo <= hi)) {
        throw invalid_input("require 0 <= lo <= hi <= 1");
    }
    AnchorAssignment out;
    const size_t na = anchors.size();
    out.labels.assign(na, AnchorLabel::ignore);
    out.matched_gt.assign(na, -1);

    std::vector<Box> gt_boxes;
    gt_boxes.reserve(gts.size());
    for (const Ellipse& e : gts) gt_boxes.push_back(ellipse_bbox(e));

    std::vector<double> best_iou(na, 0.0);  // per-anchor argmax over gts
    std::vector<int> best_gt(na, -1);
    std::vector<double> gt_best_iou(gts.size(), 0.0);
    std::vector<int> gt_best_anchor(gts.size(), -1);

    for (size_t i = 0; i < na; ++i) {
        const Box ab = anchors[i].box();
        for (size_t j = 0; j < gts.size(); ++j) {
            const double iou = box_iou(ab, gt_boxes[j]);
            if (iou > best_iou[i]) {
                best_iou[i] = iou;
                best_gt[i] = static_cast<int>(j);
            }
            if (iou > gt_best_iou[j]) {
                gt_best_iou[j] = iou;
                gt_best_anchor[j] = static_cast<int>(i);
            }
        }
        if (best_iou[i] >= hi) {
            out.labels[i] = AnchorLabel::positive;
        } else if (best_iou[i] < lo) {
            out.labels[i] = AnchorLabel::negative;
        }
    }
    for (size_t j = 0; j < gts.size(); ++j) {
        if (gt_best_anchor[j] >= 0) {  // skip gts with no overlap anywhere
            out.labels[gt_best_anchor[j]] = AnchorLabel::positive;
        }
    }
    for (size_t i = 0; i < na; ++i) {
        if (out.labels[i] == AnchorLabel::positive) {
            out.matched_gt[i] = best_gt[i];
        }
    }
    return out;
}

}  // namespace gpn
