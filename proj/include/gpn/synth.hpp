#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "gpn/common.hpp"
#include "gpn/eval.hpp"
#include "gpn/geometry.hpp"
#include "gpn/kl_loss.hpp"
#include "gpn/raster.hpp"
#include "gpn/rng.hpp"

namespace gpn {

/// A scalar sampling distribution selectable from configuration.
struct DistSpec {
    enum class Kind { uniform, log_uniform, constant };

    Kind kind = Kind::constant;
    double a = 0.0;  // lower bound, or the constant value
    double b = 0.0;  // upper bound, unused for constant

    static DistSpec make_uniform(double lo, double hi) {
        return {Kind::uniform, lo, hi};
    }
    static DistSpec make_log_uniform(double lo, double hi) {
        return {Kind::log_uniform, lo, hi};
    }
    static DistSpec make_constant(double v) { return {Kind::constant, v, v}; }

    double min_value() const { return a; }
    double max_value() const { return kind == Kind::constant ? a : b; }

    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::uniform:
                return rng.uniform(a, b);
            case Kind::log_uniform:
                return rng.log_uniform(a, b);
            case Kind::constant:
                require_finite(a, "constant value");
                return a;
        }
        throw invalid_input("unknown distribution kind");
    }
};

/// Synthetic scene parameters. Defaults give 512x512 images holding one to
/// three lesions with wide rotation spread and aspect ratios mostly in
/// [1, 3], which is the regime the detection metrics care about.
struct SceneConfig {
    double image_w = 512.0;
    double image_h = 512.0;
    int min_lesions = 1;
    int max_lesions = 3;
    DistSpec semi_major = DistSpec::make_log_uniform(8.0, 64.0);
    DistSpec aspect = DistSpec::make_log_uniform(1.0, 3.0);
    DistSpec angle =
        DistSpec::make_uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::uint64_t seed = 0;
};

inline std::string synth_image_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%06d", index);
    return buf;
}

/// Deterministic scene sampler. Each image consumes its own derived stream,
/// so the output is independent of generation order or parallelism. Per
/// lesion the draw order is semi-major, aspect, angle, center x, center y;
/// centers are drawn so the ellipse bbox stays inside the image.
inline std::vector<GroundTruth> generate_scenes(const SceneConfig& cfg,
                                                int n_images) {
    if (n_images < 0) throw invalid_input("n_images must be >= 0");
    if (cfg.min_lesions < 0 || cfg.max_lesions < cfg.min_lesions) {
        throw invalid_input("lesion count range is empty");
    }
    if (!(cfg.image_w > 0.0) || !(cfg.image_h > 0.0)) {
        throw invalid_input("image extents must be positive");
    }
    if (!(cfg.semi_major.min_value() >= kAxisFloor)) {
        throw invalid_input("semi-major range must stay above the axis floor");
    }
    if (!(cfg.aspect.min_value() >= 1.0)) {
        throw invalid_input("aspect ratios must be >= 1");
    }
    if (!(cfg.semi_major.min_value() / cfg.aspect.max_value() >= kAxisFloor)) {
        throw invalid_input("semi-minor range dips below the axis floor");
    }
    if (2.0 * cfg.semi_major.max_value() >
        std::min(cfg.image_w, cfg.image_h)) {
        throw invalid_input("largest lesion cannot fit inside the image");
    }

    std::vector<GroundTruth> out;
    for (int i = 0; i < n_images; ++i) {
        Rng rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(i));
        const std::string id = synth_image_id(i);
        const int n = rng.uniform_int(cfg.min_lesions, cfg.max_lesions);
        for (int k = 0; k < n; ++k) {
            const double sl = cfg.semi_major.sample(rng);
            const double asp = cfg.aspect.sample(rng);
            const double ss = sl / asp;
            const double th = cfg.angle.sample(rng);
            const double c = std::cos(th);
            const double s = std::sin(th);
            const double hx = std::sqrt(c * c * sl * sl + s * s * ss * ss);
            const double hy = std::sqrt(s * s * sl * sl + c * c * ss * ss);
            const double cx = rng.uniform(hx, cfg.image_w - hx);
            const double cy = rng.uniform(hy, cfg.image_h - hy);
            out.emplace_back(Ellipse(cx, cy, sl, ss, th), id);
        }
    }
    return out;
}

/// Detector simulator parameters. Noise scales: center offsets are a
/// fraction of the ground truth's semi-major axis, axis noise multiplies
/// each semi-axis by exp(N(0, sigma)), angle noise is additive in degrees.
/// Misses drop ground truths; false positives arrive Poisson per image.
/// Scores decay with the KL divergence from the source ground truth
/// (nearest one for false positives), divided by score_separation, so
/// well-localized detections score near 1 and spurious ones near 0.
struct CorruptionConfig {
    double center_noise_sigma = 0.05;
    double axis_noise_sigma = 0.05;
    double angle_noise_sigma_deg = 2.0;
    double miss_rate = 0.0;
    double fp_rate = 0.5;
    double score_separation = 2.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double kl_score(const Ellipse& source, const Ellipse& det,
                       double separation) {
    const double q = std::max(kl_divergence(source, det), 0.0);
    return std::exp(-q / separation);
}

}  // namespace detail

/// Applies the simulated detector to a ground-truth list. Images are the
/// distinct ids of the input; each image consumes one derived stream keyed
/// by its id, so the result does not depend on how images interleave. Per
/// image: each gt in input order draws (miss, dx, dy, axis noise x2, angle
/// noise), then a Poisson count of false positives is placed around the
/// image's lesions. Internal draws clamp semi-axes to the construction
/// floor instead of rejecting.
inline std::vector<Detection> corrupt(const std::vector<GroundTruth>& gts,
                                      const CorruptionConfig& cfg) {
    if (!(cfg.miss_rate >= 0.0) || cfg.miss_rate > 1.0) {
        throw invalid_input("miss_rate must be in [0, 1]");
    }
    if (!(cfg.fp_rate >= 0.0) || !std::isfinite(cfg.fp_rate)) {
        throw invalid_input("fp_rate must be >= 0");
    }
    if (!(cfg.center_noise_sigma >= 0.0) || !(cfg.axis_noise_sigma >= 0.0) ||
        !(cfg.angle_noise_sigma_deg >= 0.0)) {
        throw invalid_input("noise sigmas must be >= 0");
    }
    if (!(cfg.score_separation > 0.0) ||
        !std::isfinite(cfg.score_separation)) {
        throw invalid_input("score_separation must be > 0");
    }

    // Group gt indices by image, keeping first-appearance image order.
    std::vector<std::string> image_order;
    std::vector<std::vector<size_t>> image_gts;
    for (size_t j = 0; j < gts.size(); ++j) {
        const std::string& id = gts[j].image_id;
        size_t slot = image_order.size();
        for (size_t k = 0; k < image_order.size(); ++k) {
            if (image_order[k] == id) {
                slot = k;
                break;
            }
        }
        if (slot == image_order.size()) {
            image_order.push_back(id);
            image_gts.emplace_back();
        }
        image_gts[slot].push_back(j);
    }

    const double angle_sigma_rad =
        cfg.angle_noise_sigma_deg * std::numbers::pi / 180.0;
    std::vector<Detection> out;
    for (size_t k = 0; k < image_order.size(); ++k) {
        const std::string& id = image_order[k];
        Rng rng = derive_stream(cfg.seed, id);

        for (size_t j : image_gts[k]) {
            if (rng.uniform01() < cfg.miss_rate) continue;
            const Ellipse& g = gts[j].ellipse;
            const double sm = std::max(g.sigma_l, g.sigma_s);
            const double cx =
                g.mu_x + rng.normal(0.0, cfg.center_noise_sigma * sm);
            const double cy =
                g.mu_y + rng.normal(0.0, cfg.center_noise_sigma * sm);
            const double sl = std::max(
                g.sigma_l * std::exp(rng.normal(0.0, cfg.axis_noise_sigma)),
                kAxisFloor);
            const double ss = std::max(
                g.sigma_s * std::exp(rng.normal(0.0, cfg.axis_noise_sigma)),
                kAxisFloor);
            const double th = g.theta + rng.normal(0.0, angle_sigma_rad);
            const Ellipse det(cx, cy, sl, ss, th);
            out.emplace_back(det,
                             detail::kl_score(g, det, cfg.score_separation),
                             id);
        }

        // False positives scatter around the image's lesions: inside the
        // doubled union bbox, sized relative to the median semi-major.
        const int n_fp = rng.poisson(cfg.fp_rate);
        if (n_fp == 0) continue;
        std::vector<double> majors;
        Box region = ellipse_bbox(gts[image_gts[k][0]].ellipse);
        for (size_t j : image_gts[k]) {
            region = union_box(region, ellipse_bbox(gts[j].ellipse));
            majors.push_back(
                std::max(gts[j].ellipse.sigma_l, gts[j].ellipse.sigma_s));
        }
        std::sort(majors.begin(), majors.end());
        const size_t m = majors.size();
        const double med = m % 2 == 1
                               ? majors[m / 2]
                               : 0.5 * (majors[m / 2 - 1] + majors[m / 2]);
        const Box fp_region(region.cx, region.cy, 2.0 * region.w,
                            2.0 * region.h);
        const double lo = std::max(0.5 * med, 4.0 * kAxisFloor);
        const double hi = std::max(2.0 * med, lo);
        for (int f = 0; f < n_fp; ++f) {
            const double cx = rng.uniform(fp_region.x0(), fp_region.x1());
            const double cy = rng.uniform(fp_region.y0(), fp_region.y1());
            const double sl = rng.log_uniform(lo, hi);
            const double asp = rng.log_uniform(1.0, 3.0);
            const double ss = std::max(sl / asp, kAxisFloor);
            const double th = rng.uniform(-std::numbers::pi / 2,
                                          std::numbers::pi / 2);
            const Ellipse det(cx, cy, sl, ss, th);
            double min_kl = std::numeric_limits<double>::infinity();
            for (size_t j : image_gts[k]) {
                min_kl =
                    std::min(min_kl, kl_divergence(gts[j].ellipse, det));
            }
            const double score =
                std::exp(-std::max(min_kl, 0.0) / cfg.score_separation);
            out.emplace_back(det, score, id);
        }
    }
    return out;
}

}  // namespace gpn
