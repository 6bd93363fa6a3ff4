#pragma once

#include "ema/types.hpp"

#include <vector>

namespace ema {

/// Clamped uniform cubic B-spline (a NURBS with all weights 1).
///
/// The curve passes through the first and last control points. Arc length
/// is integrated per knot span with adaptive Gauss-Legendre quadrature and
/// cached at construction, so length queries and inversion are cheap.
class CubicBSpline {
public:
    static constexpr int kDegree = 3;

    explicit CubicBSpline(Points control_points);

    const Points& control_points() const { return control_; }
    const std::vector<double>& knots() const { return knots_; }

    // u in [0, 1]; throws ValidationError outside.
    Vec3 eval(double u) const;
    Vec3 derivative(double u) const;
    Vec3 tangent(double u) const;  // unit

    double arc_length() const { return total_length_; }
    double arc_length_at(double u) const;  // length of [0, u]
    // Parameter whose prefix length is `length`; 0 <= length <= arc_length().
    double param_at_arclength(double length) const;
    Vec3 point_at_arclength(double length) const;

private:
    std::size_t span_of(double u) const;
    double span_length(double u0, double u1) const;

    Points control_;
    std::vector<double> knots_;
    Points deriv_control_;            // degree-2 hodograph control points
    std::vector<double> inner_knots_; // knots_ without its end knots
    std::vector<double> span_start_;  // cumulative length at each span start
    double total_length_ = 0.0;
};

// Relative tolerance of the arc-length quadrature.
inline constexpr double kArcLengthTolerance = 1e-10;

}  // namespace ema
