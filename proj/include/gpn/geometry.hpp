#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpn/common.hpp"

namespace gpn {

/// Bounding ellipse parameterized the way the loss consumes it: center,
/// the two semi-axis lengths, and the rotation of the first axis.
///
/// sigma_l and sigma_s are the semi-axes along the rotated x'/y' directions.
/// They are not required to be ordered; a flipped representation
/// (sigma_l < sigma_s) describes the same point set with theta off by pi/2.
/// theta is normalized to (-pi/2, pi/2] at construction.
struct Ellipse {
    double mu_x;
    double mu_y;
    double sigma_l;
    double sigma_s;
    double theta;

    Ellipse(double mu_x, double mu_y, double sigma_l, double sigma_s,
            double theta_rad);

    Vec2 center() const { return {mu_x, mu_y}; }
    double area() const { return std::numbers::pi * sigma_l * sigma_s; }
};

/// 2D Gaussian with the covariance stored by its three distinct entries.
struct Gaussian2D {
    Vec2 mu;
    double sxx;
    double sxy;
    double syy;

    Gaussian2D(Vec2 mu, double sxx, double sxy, double syy);

    /// Builds from a full matrix; rejects asymmetry beyond 1e-9 relative.
    static Gaussian2D from_matrix(Vec2 mu, const Mat2& sigma);

    Mat2 sigma() const { return {sxx, sxy, sxy, syy}; }
    double det() const { return sxx * syy - sxy * sxy; }
};

/// Axis-aligned box given by center and full extents.
struct Box {
    double cx;
    double cy;
    double w;
    double h;

    Box(double cx, double cy, double w, double h);

    double x0() const { return cx - 0.5 * w; }
    double x1() const { return cx + 0.5 * w; }
    double y0() const { return cy - 0.5 * h; }
    double y1() const { return cy + 0.5 * h; }
    double area() const { return w * h; }
};

/// R(theta) = [[cos, sin], [-sin, cos]]: maps world coordinates into the
/// ellipse frame.
inline Mat2 rotation_matrix(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c, s, -s, c};
}

/// Reduces an angle to the half-open interval (-pi/2, pi/2] modulo pi.
inline double normalize_angle(double theta_rad) {
    require_finite(theta_rad, "angle");
    double r = std::fmod(theta_rad, std::numbers::pi);
    if (r <= -std::numbers::pi / 2) r += std::numbers::pi;
    if (r > std::numbers::pi / 2) r -= std::numbers::pi;
    return r;
}

inline Ellipse::Ellipse(double mu_x_, double mu_y_, double sigma_l_,
                        double sigma_s_, double theta_rad)
    : mu_x(mu_x_), mu_y(mu_y_), sigma_l(sigma_l_), sigma_s(sigma_s_) {
    require_finite(mu_x, "mu_x");
    require_finite(mu_y, "mu_y");
    if (!std::isfinite(sigma_l) || !std::isfinite(sigma_s) ||
        sigma_l < kAxisFloor || sigma_s < kAxisFloor) {
        throw degenerate_ellipse("semi-axis below floor: sigma_l=" +
                                 std::to_string(sigma_l) +
                                 " sigma_s=" + std::to_string(sigma_s));
    }
    theta = normalize_angle(theta_rad);
}

inline Gaussian2D::Gaussian2D(Vec2 mu_, double sxx_, double sxy_, double syy_)
    : mu(mu_), sxx(sxx_), sxy(sxy_), syy(syy_) {
    require_finite(mu.x, "mu_x");
    require_finite(mu.y, "mu_y");
    if (!std::isfinite(sxx) || !std::isfinite(sxy) || !std::isfinite(syy) ||
        sxx <= 0.0 || syy <= 0.0 || sxx * syy - sxy * sxy <= 0.0) {
        throw degenerate_covariance("covariance is not positive-definite");
    }
}

inline Gaussian2D Gaussian2D::from_matrix(Vec2 mu, const Mat2& sigma) {
    const double scale = std::max({std::abs(sigma.m00), std::abs(sigma.m01),
                                   std::abs(sigma.m10), std::abs(sigma.m11),
                                   1.0});
    if (std::abs(sigma.m01 - sigma.m10) > 1e-9 * scale) {
        throw degenerate_covariance("covariance matrix is not symmetric");
    }
    return Gaussian2D(mu, sigma.m00, 0.5 * (sigma.m01 + sigma.m10), sigma.m11);
}

inline Box::Box(double cx_, double cy_, double w_, double h_)
    : cx(cx_), cy(cy_), w(w_), h(h_) {
    require_finite(cx, "cx");
    require_finite(cy, "cy");
    if (!std::isfinite(w) || !std::isfinite(h) || w <= 0.0 || h <= 0.0) {
        throw invalid_input("box extents must be positive");
    }
}

/// Sigma = R^T(theta) diag(sigma_l^2, sigma_s^2) R(theta).
inline Gaussian2D ellipse_to_gaussian(const Ellipse& e) {
    const double c = std::cos(e.theta);
    const double s = std::sin(e.theta);
    const double a = e.sigma_l * e.sigma_l;
    const double b = e.sigma_s * e.sigma_s;
    const double sxx = c * c * a + s * s * b;
    const double syy = s * s * a + c * c * b;
    const double sxy = c * s * (a - b);
    return Gaussian2D(e.center(), sxx, sxy, syy);
}

/// Inverse of ellipse_to_gaussian via the closed-form 2x2 eigendecomposition.
/// The eigenvalue tied to the returned theta is reported first, so the
/// round-trip preserves (sigma_l, sigma_s) up to the theta flip ambiguity;
/// exactly circular covariances come back with theta = 0.
inline Ellipse gaussian_to_ellipse(const Gaussian2D& g) {
    const double a = g.sxx;
    const double b = g.sxy;
    const double c = g.syy;
    double lam_l;  // eigenvalue whose eigenvector is at angle theta
    double lam_s;
    double theta;
    if (b == 0.0) {
        lam_l = a;
        lam_s = c;
        theta = 0.0;
        if (c > a) {
            std::swap(lam_l, lam_s);
            theta = std::numbers::pi / 2;
        }
    } else {
        const double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
        lam_l = 0.5 * (a + c + disc);
        lam_s = g.det() / lam_l;  // product form avoids cancellation
        theta = std::atan2(lam_l - a, b);
    }
    if (lam_s <= 0.0) {
        throw degenerate_covariance("covariance is not positive-definite");
    }
    return Ellipse(g.mu.x, g.mu.y, std::sqrt(lam_l), std::sqrt(lam_s), theta);
}

/// Normalized Gaussian density at p.
inline double gaussian_pdf(const Gaussian2D& g, Vec2 p) {
    require_finite(p.x, "p.x");
    require_finite(p.y, "p.y");
    const double det = g.det();
    const double dx = p.x - g.mu.x;
    const double dy = p.y - g.mu.y;
    // Inverse covariance entries, computed directly from the 2x2 adjugate.
    const double ixx = g.syy / det;
    const double ixy = -g.sxy / det;
    const double iyy = g.sxx / det;
    const double q = dx * (ixx * dx + ixy * dy) + dy * (ixy * dx + iyy * dy);
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Tight axis-aligned bounding box of the ellipse outline.
/// Half-extents are sqrt of the covariance diagonal.
inline Box ellipse_bbox(const Ellipse& e) {
    const double c = std::cos(e.theta);
    const double s = std::sin(e.theta);
    const double a = e.sigma_l * e.sigma_l;
    const double b = e.sigma_s * e.sigma_s;
    const double hx = std::sqrt(c * c * a + s * s * b);
    const double hy = std::sqrt(s * s * a + c * c * b);
    return Box(e.mu_x, e.mu_y, 2.0 * hx, 2.0 * hy);
}

/// Same point set, with axes swapped so that sigma_l >= sigma_s.
inline Ellipse canonicalize(const Ellipse& e) {
    if (e.sigma_s > e.sigma_l) {
        return Ellipse(e.mu_x, e.mu_y, e.sigma_s, e.sigma_l,
                       e.theta + std::numbers::pi / 2);
    }
    return e;
}

/// Major/minor axis ratio, always >= 1.
inline double aspect_ratio(const Ellipse& e) {
    return std::max(e.sigma_l, e.sigma_s) / std::min(e.sigma_l, e.sigma_s);
}

/// True when the axes differ by less than tol relative: the orientation
/// carries no information and angle comparisons are skipped.
inline bool is_nearly_circular(const Ellipse& e, double tol = 1e-6) {
    return aspect_ratio(e) < 1.0 + tol;
}

/// Quadratic form (p - mu)^T Sigma^{-1} (p - mu) <= 1, evaluated in the
/// ellipse frame so no matrix inversion is needed.
inline bool point_in_ellipse(const Ellipse& e, Vec2 p) {
    const double c = std::cos(e.theta);
    const double s = std::sin(e.theta);
    const double dx = p.x - e.mu_x;
    const double dy = p.y - e.mu_y;
    const double u = (c * dx + s * dy) / e.sigma_l;
    const double v = (c * dy - s * dx) / e.sigma_s;
    return u * u + v * v <= 1.0;
}

}  // namespace gpn
