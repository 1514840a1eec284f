#pragma once

#include <cmath>

#include "gpn/anchors.hpp"
#include "gpn/common.hpp"
#include "gpn/geometry.hpp"

namespace gpn {

/// Loss magnitude; KL divergences are in nats and non-negative up to
/// -1e-12 numerical slack, smoothed L1 sums are dimensionless.
using LossValue = double;

/// Rates of change of a loss w.r.t. the five proposal parameters.
struct ParamGradient {
    double d_mu_x = 0.0;
    double d_mu_y = 0.0;
    double d_sigma_l = 0.0;
    double d_sigma_s = 0.0;
    double d_theta = 0.0;
};

/// tr(Sigma_p^{-1} Sigma_t), expanded in scalars. Depends on the angles only
/// through their difference.
inline double kl_trace_term(const Ellipse& target, const Ellipse& proposal) {
    const double c = std::cos(proposal.theta - target.theta);
    const double s = std::sin(proposal.theta - target.theta);
    const double ta = target.sigma_l * target.sigma_l;
    const double tb = target.sigma_s * target.sigma_s;
    const double pa = proposal.sigma_l * proposal.sigma_l;
    const double pb = proposal.sigma_s * proposal.sigma_s;
    return (c * c * ta + s * s * tb) / pa + (s * s * ta + c * c * tb) / pb;
}

/// (mu_p - mu_t)^T Sigma_p^{-1} (mu_p - mu_t): the center offset projected
/// onto the proposal's axes and scaled by its variances.
inline double kl_mahalanobis_term(const Ellipse& target,
                                  const Ellipse& proposal) {
    const double cp = std::cos(proposal.theta);
    const double sp = std::sin(proposal.theta);
    const double dx = proposal.mu_x - target.mu_x;
    const double dy = proposal.mu_y - target.mu_y;
    const double u = cp * dx + sp * dy;
    const double v = -sp * dx + cp * dy;
    const double pa = proposal.sigma_l * proposal.sigma_l;
    const double pb = proposal.sigma_s * proposal.sigma_s;
    return (u * u) / pa + (v * v) / pb;
}

/// ln(|Sigma_p| / |Sigma_t|).
inline double kl_log_det_term(const Ellipse& target, const Ellipse& proposal) {
    const double ta = target.sigma_l * target.sigma_l;
    const double tb = target.sigma_s * target.sigma_s;
    const double pa = proposal.sigma_l * proposal.sigma_l;
    const double pb = proposal.sigma_s * proposal.sigma_s;
    return std::log(pa / ta) + std::log(pb / tb);
}

/// D_KL(target || proposal) between the Gaussians of the two ellipses:
/// 1/2 [tr(Sigma_p^{-1} Sigma_t) + Mahalanobis + ln(|Sigma_p|/|Sigma_t|) - 2],
/// evaluated through the scalar term expansion above rather than generic
/// matrix inversion.
inline LossValue kl_divergence(const Ellipse& target, const Ellipse& proposal) {
    const double trace = kl_trace_term(target, proposal);
    const double maha = kl_mahalanobis_term(target, proposal);
    const double log_det = kl_log_det_term(target, proposal);
    return 0.5 * (trace + maha + log_det - 2.0);
}

/// The theta = 0 specialization of kl_divergence. Requires both inputs to be
/// exactly axis-aligned; this is a simplified form, not an approximation,
/// so rotated inputs are rejected.
inline LossValue kl_divergence_axis_aligned(const Ellipse& target,
                                            const Ellipse& proposal) {
    if (target.theta != 0.0 || proposal.theta != 0.0) {
        throw invalid_input("axis-aligned KL requires theta == 0 on both");
    }
    const double ta = target.sigma_l * target.sigma_l;
    const double tb = target.sigma_s * target.sigma_s;
    const double pa = proposal.sigma_l * proposal.sigma_l;
    const double pb = proposal.sigma_s * proposal.sigma_s;
    const double trace = ta / pa + tb / pb;
    const double dx = proposal.mu_x - target.mu_x;
    const double dy = proposal.mu_y - target.mu_y;
    const double maha = (dx * dx) / pa + (dy * dy) / pb;
    const double log_det = std::log(pa / ta) + std::log(pb / tb);
    return 0.5 * (trace + maha + log_det - 2.0);
}

/// Analytic gradient of kl_divergence w.r.t. the five proposal parameters,
/// in raw units (pixels for centers and axes, radians for theta).
inline ParamGradient kl_gradient(const Ellipse& target,
                                 const Ellipse& proposal) {
    const double c = std::cos(proposal.theta - target.theta);
    const double s = std::sin(proposal.theta - target.theta);
    const double cp = std::cos(proposal.theta);
    const double sp = std::sin(proposal.theta);
    const double ta = target.sigma_l * target.sigma_l;
    const double tb = target.sigma_s * target.sigma_s;
    const double pa = proposal.sigma_l * proposal.sigma_l;
    const double pb = proposal.sigma_s * proposal.sigma_s;
    const double dx = proposal.mu_x - target.mu_x;
    const double dy = proposal.mu_y - target.mu_y;
    const double u = cp * dx + sp * dy;
    const double v = -sp * dx + cp * dy;

    ParamGradient g;
    g.d_mu_x = u * cp / pa - v * sp / pb;
    g.d_mu_y = u * sp / pa + v * cp / pb;
    g.d_sigma_l =
        1.0 / proposal.sigma_l -
        (c * c * ta + s * s * tb + u * u) / (pa * proposal.sigma_l);
    g.d_sigma_s =
        1.0 / proposal.sigma_s -
        (s * s * ta + c * c * tb + v * v) / (pb * proposal.sigma_s);
    g.d_theta = (1.0 / pa - 1.0 / pb) * (u * v - s * c * (ta - tb));
    return g;
}

/// Huber-style penalty with transition point 1: quadratic near zero,
/// linear in the tails.
inline double smoothed_l1(double pred, double tgt) {
    require_finite(pred, "pred");
    require_finite(tgt, "tgt");
    const double d = std::abs(pred - tgt);
    return d < 1.0 ? 0.5 * d * d : d - 0.5;
}

/// d smoothed_l1 / d pred.
inline double smoothed_l1_derivative(double pred, double tgt) {
    require_finite(pred, "pred");
    require_finite(tgt, "tgt");
    const double d = pred - tgt;
    if (d > 1.0) return 1.0;
    if (d < -1.0) return -1.0;
    return d;
}

/// Baseline detector regression loss: smoothed L1 summed over the five
/// encoded components, the orientation handled through its tangent.
inline LossValue rpn_regression_loss(const EncodedEllipse& pred,
                                     const EncodedEllipse& tgt) {
    return smoothed_l1(pred.tx, tgt.tx) + smoothed_l1(pred.ty, tgt.ty) +
           smoothed_l1(pred.tw, tgt.tw) + smoothed_l1(pred.th, tgt.th) +
           smoothed_l1(pred.t_tan, tgt.t_tan);
}

}  // namespace gpn
