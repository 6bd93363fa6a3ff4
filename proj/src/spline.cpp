#include "ema/spline.hpp"

#include "ema/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ema {

namespace {

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 7> kNodes = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
                                          0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
constexpr std::array<double, 7> kWeights = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
                                            0.4179591836734694, 0.3818300505051189, 0.2797053914892766,
                                            0.1294849661688697};

// de Boor's algorithm for a curve of degree p on `knots`, span k.
Vec3 de_boor(const Points& ctrl, const std::vector<double>& knots, int p, std::size_t k, double u) {
    std::array<Vec3, 4> d;
    for (int j = 0; j <= p; ++j) d[static_cast<std::size_t>(j)] = ctrl[k - static_cast<std::size_t>(p) + static_cast<std::size_t>(j)];
    for (int r = 1; r <= p; ++r) {
        for (int j = p; j >= r; --j) {
            const std::size_t i = k - static_cast<std::size_t>(p) + static_cast<std::size_t>(j);
            const double denom = knots[i + static_cast<std::size_t>(p - r) + 1] - knots[i];
            const double alpha = denom > 0.0 ? (u - knots[i]) / denom : 0.0;
            d[static_cast<std::size_t>(j)] = (1.0 - alpha) * d[static_cast<std::size_t>(j - 1)] + alpha * d[static_cast<std::size_t>(j)];
        }
    }
    return d[static_cast<std::size_t>(p)];
}

}  // namespace

CubicBSpline::CubicBSpline(Points control_points) : control_(std::move(control_points)) {
    const std::size_t n = control_.size();
    if (n < 4) throw ValidationError("cubic spline needs at least 4 control points");
    for (const auto& p : control_)
        if (!p.allFinite()) throw ValidationError("non-finite spline control point");

    const std::size_t spans = n - 3;
    knots_.assign(4, 0.0);
    for (std::size_t i = 1; i < spans; ++i) knots_.push_back(static_cast<double>(i) / static_cast<double>(spans));
    knots_.insert(knots_.end(), 4, 1.0);

    inner_knots_.assign(knots_.begin() + 1, knots_.end() - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        deriv_control_.push_back(3.0 * (control_[i + 1] - control_[i]) / (knots_[i + 4] - knots_[i + 1]));

    span_start_.assign(spans + 1, 0.0);
    for (std::size_t s = 0; s < spans; ++s)
        span_start_[s + 1] = span_start_[s] + span_length(knots_[s + 3], knots_[s + 4]);
    total_length_ = span_start_.back();
}

std::size_t CubicBSpline::span_of(double u) const {
    const std::size_t last = control_.size() - 1;  // highest valid span index
    if (u >= 1.0) return last;
    auto it = std::upper_bound(knots_.begin() + 3, knots_.begin() + static_cast<long>(last) + 1, u);
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

Vec3 CubicBSpline::eval(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("spline parameter outside [0, 1]");
    return de_boor(control_, knots_, kDegree, span_of(u), u);
}

Vec3 CubicBSpline::derivative(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("spline parameter outside [0, 1]");
    // Hodograph: degree 2 on the knot vector without its end knots.
    return de_boor(deriv_control_, inner_knots_, kDegree - 1, span_of(u) - 1, u);
}

Vec3 CubicBSpline::tangent(double u) const {
    const Vec3 d = derivative(u);
    const double len = d.norm();
    if (len > 0.0) return d / len;
    // Stationary point: fall back to a secant.
    const double h = 1e-6;
    const Vec3 s = eval(std::min(1.0, u + h)) - eval(std::max(0.0, u - h));
    return s.normalized();
}

double CubicBSpline::span_length(double u0, double u1) const {
    auto gauss = [&](double a, double b) {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double s = 0.0;
        for (std::size_t i = 0; i < kNodes.size(); ++i) s += kWeights[i] * derivative(mid + half * kNodes[i]).norm();
        return s * half;
    };
    // Adaptive bisection until the two halves agree with the whole.
    auto recurse = [&](auto&& self, double a, double b, double whole, int depth) -> double {
        const double m = 0.5 * (a + b);
        const double left = gauss(a, m), right = gauss(m, b);
        const double sum = left + right;
        if (depth >= 30 || std::abs(sum - whole) <= kArcLengthTolerance * std::max(std::abs(sum), 1e-12)) return sum;
        return self(self, a, m, left, depth + 1) + self(self, m, b, right, depth + 1);
    };
    if (u1 <= u0) return 0.0;
    return recurse(recurse, u0, u1, gauss(u0, u1), 0);
}

double CubicBSpline::arc_length_at(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("spline parameter outside [0, 1]");
    const std::size_t k = span_of(u);
    const std::size_t s = k - 3;
    return span_start_[s] + span_length(knots_[k], std::min(u, knots_[k + 1]));
}

double CubicBSpline::param_at_arclength(double length) const {
    const double tol = 1e-12 * std::max(total_length_, 1.0);
    if (!(length >= -tol && length <= total_length_ + tol))
        throw ValidationError("arc length outside [0, total length]");
    if (length <= 0.0) return 0.0;
    if (length >= total_length_) return 1.0;

    const std::size_t spans = span_start_.size() - 1;
    std::size_t s = static_cast<std::size_t>(std::upper_bound(span_start_.begin(), span_start_.end(), length) -
                                             span_start_.begin()) - 1;
    s = std::min(s, spans - 1);
    double lo = knots_[s + 3], hi = knots_[s + 4];
    const double target = length - span_start_[s];
    double u = lo + (hi - lo) * target / std::max(span_start_[s + 1] - span_start_[s], 1e-300);
    // Safeguarded Newton: the prefix length is monotone in u.
    for (int it = 0; it < 100; ++it) {
        const double f = span_length(knots_[s + 3], u) - target;
        if (std::abs(f) <= 1e-13 * std::max(total_length_, 1.0)) break;
        if (f > 0.0) hi = u;
        else lo = u;
        const double speed = derivative(u).norm();
        double next = speed > 0.0 ? u - f / speed : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16) break;
        u = next;
    }
    return u;
}

Vec3 CubicBSpline::point_at_arclength(double length) const { return eval(param_at_arclength(length)); }

}  // namespace ema
