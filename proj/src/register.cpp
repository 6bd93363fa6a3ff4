#include "ema/register.hpp"

#include "ema/errors.hpp"
#include "ema/format.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ema {

Plane Plane::through(const Vec3& point, const Vec3& normal) {
    const double len = normal.norm();
    if (!(len > 0.0) || !point.allFinite() || !normal.allFinite()) throw ValidationError("plane normal must be non-zero");
    return {point, normal / len};
}

Plane parse_plane(std::string_view spec) {
    spec = trim(spec);
    if (spec.size() > 2 && spec[1] == '=') {
        auto v = parse_double(trim(spec.substr(2)));
        Vec3 axis;
        switch (spec[0]) {
            case 'x': axis = Vec3::UnitX(); break;
            case 'y': axis = Vec3::UnitY(); break;
            case 'z': axis = Vec3::UnitZ(); break;
            default: throw ValidationError("bad plane spec '" + std::string(spec) + "'");
        }
        if (!v) throw ValidationError("bad plane spec '" + std::string(spec) + "'");
        return Plane::through(*v * axis, axis);
    }
    auto parts = split_char(spec, ',');
    if (parts.size() != 6) throw ValidationError("plane spec must be 'x=c' or six comma-separated numbers");
    double v[6];
    for (int i = 0; i < 6; ++i) {
        auto d = parse_double(parts[static_cast<std::size_t>(i)]);
        if (!d) throw ValidationError("bad number in plane spec '" + std::string(spec) + "'");
        v[i] = *d;
    }
    return Plane::through(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
}

Points RigidTransform::apply(const Points& pts) const {
    Points out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(apply(p));
    return out;
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
}

bool RigidTransform::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
}

double RigidTransform::rotation_angle() const {
    const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

double rotation_error(const RigidTransform& a, const RigidTransform& b) {
    // acos is ill-conditioned near zero; use the chordal form instead.
    const Mat3 d = a.rotation.transpose() * b.rotation;
    const Vec3 axis_sin(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
    return std::atan2(0.5 * axis_sin.norm(), 0.5 * (d.trace() - 1.0));
}

double translation_error(const RigidTransform& a, const RigidTransform& b) {
    return (a.translation - b.translation).norm();
}

std::string write_transform(const RigidTransform& t) {
    std::string out;
    for (int r = 0; r < 3; ++r)
        out += fixed(t.rotation(r, 0), 12) + " " + fixed(t.rotation(r, 1), 12) + " " + fixed(t.rotation(r, 2), 12) + "\n";
    out += fixed(t.translation.x(), 12) + " " + fixed(t.translation.y(), 12) + " " + fixed(t.translation.z(), 12) + "\n";
    return out;
}

RigidTransform parse_transform(std::string_view text) {
    auto tok = split_ws(text);
    if (tok.size() != 12) throw ParseError("transform file must hold 12 numbers, found " + std::to_string(tok.size()));
    double v[12];
    for (int i = 0; i < 12; ++i) {
        auto d = parse_double(tok[static_cast<std::size_t>(i)]);
        if (!d) throw ParseError("non-numeric transform value '" + std::string(tok[static_cast<std::size_t>(i)]) + "'");
        v[i] = *d;
    }
    RigidTransform t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = v[3 * r + c];
    t.translation = Vec3(v[9], v[10], v[11]);
    if (!t.is_valid(1e-6)) throw ValidationError("transform rotation is not orthonormal with determinant +1");
    return t;
}

PointCloud palate_contour(const CoilTrajectorySet& set, const std::vector<std::string>& tongue_coils,
                          const Plane& plane, const PalateOptions& options) {
    if (tongue_coils.empty()) throw ValidationError("palate contour needs at least one tongue coil");
    if (options.subsample == 0) throw ValidationError("subsample factor must be at least 1");
    std::vector<std::size_t> idx;
    for (const auto& c : tongue_coils) {
        auto i = set.coil_index(c);
        if (!i) throw ValidationError("tongue coil '" + c + "' not in recording");
        idx.push_back(*i);
    }
    Points pooled;
    for (std::size_t f = 0; f < set.frame_count(); f += options.subsample)
        for (auto c : idx) pooled.push_back(set.sample(f, c).position);
    if (pooled.size() < 4) throw ValidationError("palate contour needs at least 4 pooled coil positions");

    const ConvexHull hull = convex_hull_3d(pooled);
    const auto lines = plane_mesh_intersection(hull.mesh, plane);
    if (lines.empty()) throw NumericError("midsagittal plane does not intersect the tongue-coil hull");

    auto length = [](const Polyline& l) {
        double s = 0.0;
        const std::size_t n = l.points.size();
        for (std::size_t i = 1; i < n; ++i) s += (l.points[i] - l.points[i - 1]).norm();
        if (l.closed && n > 1) s += (l.points.front() - l.points.back()).norm();
        return s;
    };
    const Polyline& section = *std::max_element(lines.begin(), lines.end(),
                                                [&](const auto& a, const auto& b) { return length(a) < length(b); });

    Vec3 up = options.up - options.up.dot(plane.normal) * plane.normal;
    if (up.norm() < 1e-9) throw ValidationError("vertical axis is perpendicular to the contour plane");
    up.normalize();
    const Vec3 across = up.cross(plane.normal);

    const auto& pts = section.points;
    const std::size_t n = pts.size();
    std::vector<double> abscissa(n), height(n);
    double extent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        abscissa[i] = pts[i].dot(across);
        height[i] = pts[i].dot(up);
    }
    for (std::size_t i = 0; i < n; ++i) extent = std::max(extent, std::abs(abscissa[i] - abscissa[0]));
    const double tie = 1e-9 * std::max(extent, 1.0);

    // Extremes in abscissa; ties go to the higher point.
    auto pick = [&](int sign) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double d = sign * (abscissa[i] - abscissa[best]);
            if (d > tie || (std::abs(d) <= tie && height[i] > height[best])) best = i;
        }
        return best;
    };
    const std::size_t lo = pick(-1), hi = pick(+1);

    auto path = [&](int step) {
        std::vector<std::size_t> out{lo};
        for (std::size_t i = lo; i != hi;) {
            if (step > 0) i = (i + 1) % n;
            else i = (i + n - 1) % n;
            if (!section.closed && ((step > 0 && i == 0) || (step < 0 && i == n - 1))) return std::vector<std::size_t>{};
            out.push_back(i);
        }
        return out;
    };
    auto mean_height = [&](const std::vector<std::size_t>& p) {
        double s = 0.0;
        for (auto i : p) s += height[i];
        return s / static_cast<double>(p.size());
    };
    std::vector<std::size_t> fwd = path(+1), bwd = path(-1);
    std::vector<std::size_t> chosen;
    if (fwd.empty()) chosen = bwd;
    else if (bwd.empty()) chosen = fwd;
    else chosen = mean_height(fwd) >= mean_height(bwd) ? fwd : bwd;

    PointCloud out;
    out.label = "palate";
    for (auto i : chosen) out.points.push_back(pts[i]);
    return out;
}

RigidTransform umeyama_rigid(const Points& src, const Points& dst) {
    if (src.size() != dst.size()) throw ValidationError("registration point sets differ in size");
    if (src.size() < 3) throw ValidationError("registration needs at least 3 point pairs");
    const Vec3 ms = centroid(src), md = centroid(dst);
    Mat3 cov = Mat3::Zero(), scatter = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 s = src[i] - ms;
        cov += (dst[i] - md) * s.transpose();
        scatter += s * s.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    const Vec3 ev = eig.eigenvalues();  // ascending
    if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) throw NumericError("registration source points are collinear");

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU(), v = svd.matrixV();
    Mat3 s = Mat3::Identity();
    if ((u * v.transpose()).determinant() < 0.0) s(2, 2) = -1.0;
    RigidTransform t;
    t.rotation = u * s * v.transpose();
    t.translation = md - t.rotation * ms;
    return t;
}

double rms_distance(const Points& a, const Points& b) {
    if (a.size() != b.size()) throw ValidationError("rms over point sets of different size");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
    return std::sqrt(s / static_cast<double>(a.size()));
}

IcpResult icp_point_to_mesh(const Points& src, const TriangleIndex& target, const RigidTransform& init,
                            const IcpParams& params) {
    if (src.size() < 3) throw ValidationError("ICP needs at least 3 source points");
    if (params.max_iterations < 0) throw ValidationError("ICP iteration bound must be non-negative");
    auto correspond = [&](const RigidTransform& t, Points& moved, Points& matched) {
        moved = t.apply(src);
        matched.resize(moved.size());
        for (std::size_t i = 0; i < moved.size(); ++i) matched[i] = target.closest(moved[i]).point;
        return rms_distance(moved, matched);
    };

    IcpResult result;
    result.transform = init;
    Points moved, matched;
    result.rms = correspond(init, moved, matched);
    result.rms_history.push_back(result.rms);
    Points next_moved, next_matched;
    for (int it = 0; it < params.max_iterations; ++it) {
        const RigidTransform candidate = umeyama_rigid(src, matched);
        const double rms = correspond(candidate, next_moved, next_matched);
        if (rms > result.rms) break;  // only rounding can do this; keep the better transform
        const double gain = result.rms - rms;
        result.transform = candidate;
        result.rms = rms;
        result.rms_history.push_back(rms);
        result.iterations = it + 1;
        std::swap(matched, next_matched);
        if (gain < params.convergence_eps) break;
    }
    return result;
}

IcpResult icp_point_to_mesh(const Points& src, const TriMesh& target, const RigidTransform& init,
                            const IcpParams& params) {
    return icp_point_to_mesh(src, TriangleIndex(target), init, params);
}

}  // namespace ema
