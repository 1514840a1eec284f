#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gpn/geometry.hpp"
#include "gpn/raster.hpp"

namespace gpn {

/// Annotated lesion on one image.
struct GroundTruth {
    Ellipse ellipse;
    std::string image_id;

    GroundTruth(Ellipse e, std::string image_id_ = "")
        : ellipse(e), image_id(std::move(image_id_)) {}
};

/// Per-detection matching outcome, aligned with the input detection order.
struct MatchResult {
    bool is_tp = false;
    int gt_index = -1;  // index into the gts list for TPs, else -1
};

/// Greedy one-to-one matching in descending score order (ties keep input
/// order). A detection is a true positive iff its highest-IoU unmatched
/// ground truth on the same image reaches iou_thresh; matched ground truths
/// are consumed. Gt ties break toward the lowest gt index.
inline std::vector<MatchResult> match_detections(
    const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
    double iou_thresh, int cells_per_axis = 256) {
    if (!(iou_thresh > 0.0) || iou_thresh > 1.0) {
        throw invalid_input("iou_thresh must be in (0, 1]");
    }
    std::unordered_map<std::string, std::vector<size_t>> gts_by_image;
    for (size_t j = 0; j < gts.size(); ++j) {
        gts_by_image[gts[j].image_id].push_back(j);
    }
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<MatchResult> out(dets.size());
    std::vector<char> gt_taken(gts.size(), 0);
    for (size_t i : order) {
        const auto it = gts_by_image.find(dets[i].image_id);
        if (it == gts_by_image.end()) continue;
        double best_iou = 0.0;
        int best_j = -1;
        for (size_t j : it->second) {
            if (gt_taken[j]) continue;
            const double iou =
                ellipse_iou(dets[i].ellipse, gts[j].ellipse, cells_per_axis);
            if (iou > best_iou) {
                best_iou = iou;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j >= 0 && best_iou >= iou_thresh) {
            out[i].is_tp = true;
            out[i].gt_index = best_j;
            gt_taken[best_j] = 1;
        }
    }
    return out;
}

struct FrocPoint {
    double avg_fp_per_image = 0.0;
    double sensitivity = 0.0;
};

/// Sensitivity readouts at a fixed false-positive budget grid.
struct FrocCurve {
    std::vector<FrocPoint> points;  // one per requested budget, same order
};

inline const std::vector<double> kDefaultFpGrid = {0.5, 1.0, 2.0, 4.0, 8.0,
                                                   16.0};

namespace detail {

/// Shared FROC machinery: detections sorted by (score desc, image_id asc,
/// input index asc), matched once, then reduced to the operating points at
/// every distinct score threshold. Returns (fp per image, sensitivity)
/// pairs with fp non-decreasing, starting from the empty prefix (0, 0).
inline std::vector<FrocPoint> froc_sweep(const std::vector<Detection>& dets,
                                         const std::vector<GroundTruth>& gts,
                                         double iou_thresh,
                                         int cells_per_axis) {
    if (gts.empty()) {
        throw invalid_input("froc requires at least one ground truth");
    }
    std::unordered_set<std::string> images;
    for (const GroundTruth& g : gts) images.insert(g.image_id);
    for (const Detection& d : dets) images.insert(d.image_id);
    const double n_images = static_cast<double>(images.size());
    const double n_gts = static_cast<double>(gts.size());

    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) {
            return dets[a].score > dets[b].score;
        }
        if (dets[a].image_id != dets[b].image_id) {
            return dets[a].image_id < dets[b].image_id;
        }
        return a < b;
    });
    std::vector<Detection> sorted;
    sorted.reserve(dets.size());
    for (size_t i : order) sorted.push_back(dets[i]);

    // match_detections re-sorts stably by score, which preserves this order.
    const std::vector<MatchResult> match =
        match_detections(sorted, gts, iou_thresh, cells_per_axis);

    std::vector<FrocPoint> pts;
    pts.push_back({0.0, 0.0});
    int tp = 0;
    for (size_t k = 0; k < sorted.size(); ++k) {
        tp += match[k].is_tp ? 1 : 0;
        const bool last = k + 1 == sorted.size();
        // A score threshold can only cut between distinct score values.
        if (last || sorted[k + 1].score < sorted[k].score) {
            const double fp = static_cast<double>(k + 1 - tp) / n_images;
            pts.push_back({fp, static_cast<double>(tp) / n_gts});
        }
    }
    return pts;
}

/// Highest sensitivity over the operating points with fp <= budget.
inline double sensitivity_at_budget(const std::vector<FrocPoint>& pts,
                                    double budget) {
    double best = 0.0;
    for (const FrocPoint& p : pts) {
        if (p.avg_fp_per_image <= budget) {
            best = std::max(best, p.sensitivity);
        }
    }
    return best;
}

}  // namespace detail

/// All operating points of the score-threshold sweep, fp ascending.
inline std::vector<FrocPoint> froc_operating_points(
    const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
    double iou_thresh, int cells_per_axis = 256) {
    return detail::froc_sweep(dets, gts, iou_thresh, cells_per_axis);
}

/// FROC readout: for each budget f in fp_grid, the highest sensitivity
/// reachable by any score threshold whose average FP per image is <= f.
/// The image count is the number of distinct image ids across both lists.
inline FrocCurve froc(const std::vector<Detection>& dets,
                      const std::vector<GroundTruth>& gts, double iou_thresh,
                      const std::vector<double>& fp_grid = kDefaultFpGrid,
                      int cells_per_axis = 256) {
    if (fp_grid.empty()) {
        throw invalid_input("fp_grid must be non-empty");
    }
    for (size_t i = 0; i < fp_grid.size(); ++i) {
        if (!(fp_grid[i] > 0.0) || !std::isfinite(fp_grid[i]) ||
            (i > 0 && fp_grid[i] <= fp_grid[i - 1])) {
            throw invalid_input("fp_grid must be positive and ascending");
        }
    }
    const std::vector<FrocPoint> pts =
        detail::froc_sweep(dets, gts, iou_thresh, cells_per_axis);
    FrocCurve curve;
    for (double f : fp_grid) {
        curve.points.push_back({f, detail::sensitivity_at_budget(pts, f)});
    }
    return curve;
}

inline double mean_sensitivity(const FrocCurve& curve) {
    if (curve.points.empty()) return 0.0;
    double s = 0.0;
    for (const FrocPoint& p : curve.points) s += p.sensitivity;
    return s / static_cast<double>(curve.points.size());
}

struct IouSensitivity {
    double iou_thresh = 0.0;
    double sensitivity = 0.0;
};

/// Sensitivity at a fixed FP budget as the matching IoU threshold tightens.
inline std::vector<IouSensitivity> sensitivity_vs_iou(
    const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
    const std::vector<double>& thresholds, double fp_budget,
    int cells_per_axis = 256) {
    if (thresholds.empty()) {
        throw invalid_input("thresholds must be non-empty");
    }
    for (size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0) || thresholds[i] > 1.0 ||
            (i > 0 && thresholds[i] <= thresholds[i - 1])) {
            throw invalid_input("thresholds must ascend within (0, 1]");
        }
    }
    if (!std::isfinite(fp_budget) || fp_budget < 0.0) {
        throw invalid_input("fp_budget must be >= 0");
    }
    std::vector<IouSensitivity> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        const std::vector<FrocPoint> pts =
            detail::froc_sweep(dets, gts, t, cells_per_axis);
        out.push_back({t, detail::sensitivity_at_budget(pts, fp_budget)});
    }
    return out;
}

/// Angular distance in degrees between major-axis directions, modulo the
/// half-turn symmetry of an ellipse, after flipping both inputs so the
/// longer axis is the major one. Near-circles (aspect within 1e-6) carry no
/// orientation, so the error is defined as 0.
inline double angle_error_deg(const Ellipse& pred, const Ellipse& gt) {
    const Ellipse cp = canonicalize(pred);
    const Ellipse cg = canonicalize(gt);
    if (is_nearly_circular(cp) || is_nearly_circular(cg)) return 0.0;
    const double d = normalize_angle(cp.theta - cg.theta);
    return std::abs(d) * (180.0 / std::numbers::pi);
}

}  // namespace gpn
