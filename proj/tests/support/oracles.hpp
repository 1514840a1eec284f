#pragma once

// Independent reference implementations used only by tests. Each one
// recomputes a library quantity through a different route (sampling,
// finite differences, exhaustive sweeps) so agreement is evidence, not
// tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <gpn/eval.hpp>
#include <gpn/geometry.hpp>
#include <gpn/kl_loss.hpp>
#include <gpn/raster.hpp>

namespace oracle {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Log-density of the ellipse's Gaussian, evaluated in the ellipse frame
// (no covariance matrix, no library pdf call).
inline double log_pdf(const gpn::Ellipse& e, double x, double y) {
    const double c = std::cos(e.theta);
    const double s = std::sin(e.theta);
    const double dx = x - e.mu_x;
    const double dy = y - e.mu_y;
    const double u = (c * dx + s * dy) / e.sigma_l;
    const double v = (c * dy - s * dx) / e.sigma_s;
    return -0.5 * (u * u + v * v) -
           std::log(2.0 * std::numbers::pi * e.sigma_l * e.sigma_s);
}

// Monte Carlo estimate of D_KL(target || proposal) as the sample mean of
// ln f_t(x) - ln f_p(x) with x drawn from the target: samples are built in
// the target's own frame and rotated out, independent of the library's
// covariance plumbing and of its RNG helper types.
inline MeanSe mc_kl(const gpn::Ellipse& t, const gpn::Ellipse& p, int n,
                    std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    const auto u01 = [&eng] {
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    const double c = std::cos(t.theta);
    const double s = std::sin(t.theta);
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = std::sqrt(-2.0 * std::log(1.0 - u01()));
        const double phi = 2.0 * std::numbers::pi * u01();
        const double z1 = r * std::cos(phi) * t.sigma_l;
        const double z2 = r * std::sin(phi) * t.sigma_s;
        // world offset = R(theta)^T (z1, z2)
        const double x = t.mu_x + c * z1 - s * z2;
        const double y = t.mu_y + s * z1 + c * z2;
        const double v = log_pdf(t, x, y) - log_pdf(p, x, y);
        sum += v;
        sum2 += v * v;
    }
    MeanSe out;
    out.mean = sum / n;
    const double var = std::max(sum2 / n - out.mean * out.mean, 0.0);
    out.se = std::sqrt(var / n);
    return out;
}

// Central finite differences of kl_divergence in the five raw proposal
// parameters.
inline gpn::ParamGradient fd_kl_gradient(const gpn::Ellipse& t,
                                         const gpn::Ellipse& p,
                                         double h = 1e-5) {
    const auto kl_at = [&t](double mx, double my, double sl, double ss,
                            double th) {
        return gpn::kl_divergence(t, gpn::Ellipse(mx, my, sl, ss, th));
    };
    gpn::ParamGradient g;
    g.d_mu_x = (kl_at(p.mu_x + h, p.mu_y, p.sigma_l, p.sigma_s, p.theta) -
                kl_at(p.mu_x - h, p.mu_y, p.sigma_l, p.sigma_s, p.theta)) /
               (2 * h);
    g.d_mu_y = (kl_at(p.mu_x, p.mu_y + h, p.sigma_l, p.sigma_s, p.theta) -
                kl_at(p.mu_x, p.mu_y - h, p.sigma_l, p.sigma_s, p.theta)) /
               (2 * h);
    g.d_sigma_l = (kl_at(p.mu_x, p.mu_y, p.sigma_l + h, p.sigma_s, p.theta) -
                   kl_at(p.mu_x, p.mu_y, p.sigma_l - h, p.sigma_s, p.theta)) /
                  (2 * h);
    g.d_sigma_s = (kl_at(p.mu_x, p.mu_y, p.sigma_l, p.sigma_s + h, p.theta) -
                   kl_at(p.mu_x, p.mu_y, p.sigma_l, p.sigma_s - h, p.theta)) /
                  (2 * h);
    // Bypass the constructor's angle normalization so the difference is a
    // true central difference even at the interval edge.
    const auto kl_th = [&t, &p](double th) {
        gpn::Ellipse q(p.mu_x, p.mu_y, p.sigma_l, p.sigma_s, 0.0);
        q.theta = th;
        return gpn::kl_divergence(t, q);
    };
    g.d_theta = (kl_th(p.theta + h) - kl_th(p.theta - h)) / (2 * h);
    return g;
}

// Largest/smallest variance of the Gaussian over densely sampled
// directions; brackets the eigenvalues of the covariance.
struct VarRange {
    double max_var = 0.0;
    double min_var = 0.0;
    double argmax_angle = 0.0;
};

inline VarRange directional_variance(const gpn::Gaussian2D& g, int n = 20000) {
    VarRange out;
    out.max_var = -1.0;
    out.min_var = 1e300;
    for (int i = 0; i < n; ++i) {
        const double a = std::numbers::pi * i / n;
        const double dx = std::cos(a);
        const double dy = std::sin(a);
        const double v =
            dx * (g.sxx * dx + g.sxy * dy) + dy * (g.sxy * dx + g.syy * dy);
        if (v > out.max_var) {
            out.max_var = v;
            out.argmax_angle = a;
        }
        out.min_var = std::min(out.min_var, v);
    }
    return out;
}

// FROC by brute force: every distinct score becomes a candidate threshold;
// the detection subset at each threshold is re-matched from scratch, and
// the budget readout takes the best sensitivity among thresholds whose
// average FP per image fits the budget. Image universe: all distinct ids.
inline gpn::FrocCurve froc_by_sweep(const std::vector<gpn::Detection>& dets,
                                    const std::vector<gpn::GroundTruth>& gts,
                                    double iou_thresh,
                                    const std::vector<double>& fp_grid,
                                    int cells_per_axis = 256) {
    std::vector<std::string> ids;
    for (const auto& d : dets) ids.push_back(d.image_id);
    for (const auto& g : gts) ids.push_back(g.image_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const double n_images = static_cast<double>(ids.size());
    const double n_gts = static_cast<double>(gts.size());

    std::vector<double> thresholds;
    for (const auto& d : dets) thresholds.push_back(d.score);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    std::vector<gpn::FrocPoint> ops;
    ops.push_back({0.0, 0.0});  // threshold above every score
    for (double tau : thresholds) {
        std::vector<gpn::Detection> subset;
        for (const auto& d : dets) {
            if (d.score >= tau) subset.push_back(d);
        }
        const auto match =
            gpn::match_detections(subset, gts, iou_thresh, cells_per_axis);
        int tp = 0;
        for (const auto& m : match) tp += m.is_tp ? 1 : 0;
        const double fp =
            static_cast<double>(subset.size() - static_cast<size_t>(tp)) /
            n_images;
        ops.push_back({fp, static_cast<double>(tp) / n_gts});
    }

    gpn::FrocCurve curve;
    for (double budget : fp_grid) {
        double best = 0.0;
        for (const auto& op : ops) {
            if (op.avg_fp_per_image <= budget) {
                best = std::max(best, op.sensitivity);
            }
        }
        curve.points.push_back({budget, best});
    }
    return curve;
}

// Area of an ellipse by midpoint quadrature on a fine grid, used to
// sanity-check rasterization popcounts.
inline double grid_area(const gpn::Ellipse& e, double cell) {
    const gpn::Box bb = gpn::ellipse_bbox(e);
    double area = 0.0;
    for (double y = bb.y0() + cell / 2; y < bb.y1(); y += cell) {
        for (double x = bb.x0() + cell / 2; x < bb.x1(); x += cell) {
            if (gpn::point_in_ellipse(e, {x, y})) area += cell * cell;
        }
    }
    return area;
}

}  // namespace oracle
