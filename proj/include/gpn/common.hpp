#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace gpn {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments, flags, or configuration.
class invalid_input : public error {
public:
    using error::error;
};

/// Semi-axis at or below the construction floor, or non-positive.
class degenerate_ellipse : public error {
public:
    using error::error;
};

/// Covariance matrix that is not symmetric positive-definite.
class degenerate_covariance : public error {
public:
    using error::error;
};

// Minimum semi-axis length accepted at construction, in pixels.
// Smaller values are rejected, not clamped.
inline constexpr double kAxisFloor = 1e-3;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

/// Row-major 2x2 matrix [[m00, m01], [m10, m11]].
struct Mat2 {
    double m00 = 0.0, m01 = 0.0;
    double m10 = 0.0, m11 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 transposed() const { return {m00, m10, m01, m11}; }
    double det() const { return m00 * m11 - m01 * m10; }
    double trace() const { return m00 + m11; }

    Vec2 operator*(Vec2 v) const {
        return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y};
    }
    Mat2 operator*(const Mat2& o) const {
        return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
                m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
    }
};

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw invalid_input(std::string(what) + " is not finite");
    }
}

}  // namespace gpn
