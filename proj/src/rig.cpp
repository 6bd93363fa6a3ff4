#include "ema/rig.hpp"

#include "ema/closest_point.hpp"
#include "ema/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ema {

namespace {

// Substeps of the discrete parallel transport between consecutive joints.
constexpr int kTransportSteps = 16;

Mat3 orthonormal_frame(const Vec3& z, const Vec3& x_hint) {
    Vec3 x = x_hint - x_hint.dot(z) * z;
    x.normalize();
    Mat3 f;
    f.col(0) = x;
    f.col(1) = z.cross(x);
    f.col(2) = z;
    return f;
}

// Bind frame at the root: Z on the tangent, X from the least aligned world axis.
Mat3 reference_root_frame(const CubicBSpline& spline) {
    const Vec3 z = spline.tangent(0.0);
    int axis = 0;
    z.cwiseAbs().minCoeff(&axis);
    return orthonormal_frame(z, Vec3::Unit(axis));
}

// The bind root frame rotated minimally onto the current root tangent
// (zero roll at the root).
Mat3 transported_root(const Mat3& bind_root, const CubicBSpline& spline) {
    const Vec3 z = spline.tangent(0.0);
    const Mat3 q = Eigen::Quaterniond::FromTwoVectors(bind_root.col(2), z).toRotationMatrix();
    return orthonormal_frame(z, q * bind_root.col(0));
}

// Vertex normals interpolated across the face at a surface point, so the
// normal varies continuously over edges and vertices.
Vec3 smooth_normal(const TriMesh& m, const Points& normals, std::size_t face, const Vec3& p) {
    const auto& f = m.faces[face];
    const Vec3& a = m.vertices[f[0]];
    const Vec3& b = m.vertices[f[1]];
    const Vec3& c = m.vertices[f[2]];
    const Vec3 n = (b - a).cross(c - a);
    const double area = n.squaredNorm();
    if (!(area > 0.0)) return face_normal(m, face);
    const double wa = (c - b).cross(p - b).dot(n) / area;
    const double wb = (a - c).cross(p - c).dot(n) / area;
    const double wc = 1.0 - wa - wb;
    const Vec3 s = wa * normals[f[0]] + wb * normals[f[1]] + wc * normals[f[2]];
    return s.norm() > 0.0 ? Vec3(s.normalized()) : face_normal(m, face);
}

const Vec3& require_coil(const CoilFrame& frame, const std::string& coil) {
    auto it = frame.find(coil);
    if (it == frame.end()) throw ValidationError("coil '" + coil + "' missing from coil frame");
    return it->second;
}

}  // namespace

CoilFrame coil_frame(const CoilTrajectorySet& set, std::size_t frame) {
    CoilFrame out;
    for (std::size_t c = 0; c < set.coil_count(); ++c) out[set.coils()[c]] = set.sample(frame, c).position;
    return out;
}

std::vector<JointPose> place_joints(const CubicBSpline& spline, const std::vector<double>& stations,
                                    const Mat3& root_frame) {
    std::vector<JointPose> poses;
    if (stations.size() < 2) return poses;
    Mat3 frame = root_frame;
    Vec3 prev_t = root_frame.col(2);
    double prev_u = 0.0;
    for (std::size_t j = 0; j + 1 < stations.size(); ++j) {
        const double u = spline.param_at_arclength(stations[j]);
        for (int k = 1; k <= kTransportSteps && u > prev_u; ++k) {
            const double uk = prev_u + (u - prev_u) * k / kTransportSteps;
            const Vec3 t = spline.tangent(uk);
            const Mat3 q = Eigen::Quaterniond::FromTwoVectors(prev_t, t).toRotationMatrix();
            frame = orthonormal_frame(t, q * frame.col(0));
            prev_t = t;
        }
        prev_u = u;
        poses.push_back({frame, spline.eval(u)});
    }
    return poses;
}

double distance_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

SkinWeights envelope_weights(const std::vector<Capsule>& envelopes, const TriMesh& mesh, bool smoothstep) {
    for (const auto& e : envelopes)
        if (!(e.r_in > 0.0 && e.r_in < e.r_out)) throw ValidationError("envelope radii must satisfy 0 < r_in < r_out");
    SkinWeights out;
    out.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()),
                                  static_cast<Eigen::Index>(envelopes.size()));
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const auto row = static_cast<Eigen::Index>(v);
        for (std::size_t j = 0; j < envelopes.size(); ++j) {
            const auto& e = envelopes[j];
            const double d = distance_to_segment(mesh.vertices[v], e.head, e.tail);
            double w = 0.0;
            if (d <= e.r_in) w = 1.0;
            else if (d < e.r_out) w = (e.r_out - d) / (e.r_out - e.r_in);
            if (smoothstep) w = w * w * (3.0 - 2.0 * w);
            out.w(row, static_cast<Eigen::Index>(j)) = w;
        }
        const double sum = out.w.row(row).sum();
        if (sum > 0.0) out.w.row(row) /= sum;
        else out.unskinned.push_back(v);
    }
    return out;
}

CubicBSpline deform_spline(const Rig& rig, const CoilFrame& frame) {
    Points ctrl = rig.spline.control_points();
    for (const auto& h : rig.hooks) ctrl[h.control_index] = require_coil(frame, h.coil) + h.bind_offset;
    return CubicBSpline(std::move(ctrl));
}

Rig build_rig(const TriMesh& tongue, const CoilFrame& bind_frame, const RigConfig& cfg, TriMesh mandible,
              TriMesh maxilla) {
    if (cfg.joint_count < 2) throw ValidationError("joint count must be at least 2");
    if (!(cfg.r_in > 0.0 && cfg.r_in < cfg.r_out)) throw ValidationError("envelope radii must satisfy 0 < r_in < r_out");
    if (cfg.hook_coils.size() < 2) throw ValidationError("rig needs at least two hook coils");
    if (tongue.faces.empty()) throw ValidationError("tongue mesh is empty");
    validate(tongue);

    Rig rig;
    rig.tongue = tongue;
    rig.config = cfg;
    rig.bind_frame = bind_frame;
    rig.mandible = std::move(mandible);
    rig.maxilla = std::move(maxilla);

    const TriangleIndex surface(tongue);
    const Points normals = vertex_normals(tongue);
    Points ctrl{cfg.root_anchor};
    for (std::size_t i = 0; i < cfg.hook_coils.size(); ++i) {
        const auto& coil = cfg.hook_coils[i];
        const Vec3& p = require_coil(bind_frame, coil);
        Vec3 offset;
        if (cfg.depth_vector) {
            offset = *cfg.depth_vector;
        } else {
            const auto hit = surface.closest(p);
            offset = -cfg.depth * smooth_normal(tongue, normals, hit.face, hit.point);
        }
        rig.hooks.push_back({coil, i + 1, offset});
        ctrl.push_back(p + offset);
    }
    ctrl.push_back(cfg.tip_anchor);
    if (cfg.anchor_coil) {
        const Vec3& a = require_coil(bind_frame, *cfg.anchor_coil);
        rig.hooks.push_back({*cfg.anchor_coil, 0, cfg.root_anchor - a});
        rig.hooks.push_back({*cfg.anchor_coil, ctrl.size() - 1, cfg.tip_anchor - a});
    }
    rig.spline = CubicBSpline(std::move(ctrl));
    // Rebuild through the hook path so a bind-frame solve is bit-identical.
    rig.spline = deform_spline(rig, bind_frame);

    const double length = rig.spline.arc_length();
    if (!(length > 0.0)) throw NumericError("rig spline has zero length");
    const auto joints = static_cast<std::size_t>(cfg.joint_count);
    for (std::size_t j = 0; j <= joints; ++j)
        rig.chain.stations.push_back(length * static_cast<double>(j) / static_cast<double>(joints));
    rig.chain.stations.back() = length;
    rig.chain.root_frame = reference_root_frame(rig.spline);
    rig.chain.bind_poses = place_joints(rig.spline, rig.chain.stations, transported_root(rig.chain.root_frame, rig.spline));

    for (std::size_t j = 0; j < joints; ++j) {
        Capsule c;
        c.head = rig.chain.bind_poses[j].translation;
        c.tail = rig.spline.point_at_arclength(rig.chain.stations[j + 1]);
        c.r_in = cfg.r_in;
        c.r_out = cfg.r_out;
        rig.envelopes.push_back(c);
    }
    rig.weights = envelope_weights(rig.envelopes, rig.tongue, cfg.smoothstep);

    if (cfg.hinge) {
        const double len = cfg.hinge->direction.norm();
        if (!(len > 0.0)) throw ValidationError("hinge direction must be non-zero");
        JawHinge h;
        h.axis_point = cfg.hinge->point;
        h.axis_direction = cfg.hinge->direction / len;
        h.coil = cfg.hinge->coil;
        h.coil_bind_position = require_coil(bind_frame, h.coil);
        rig.jaw = h;
    }
    return rig;
}

std::vector<JointPose> solve_spline_ik(const Rig& rig, const CoilFrame& frame) {
    const CubicBSpline spline = deform_spline(rig, frame);
    const double bind_length = rig.chain.stations.back();
    const double scale = spline.arc_length() / bind_length;
    std::vector<double> stations = rig.chain.stations;
    for (auto& s : stations) s *= scale;
    stations.back() = spline.arc_length();
    return place_joints(spline, stations, transported_root(rig.chain.root_frame, spline));
}

Points skin(const Rig& rig, const std::vector<JointPose>& poses) {
    const std::size_t joints = rig.chain.joint_count();
    if (poses.size() != joints) throw ValidationError("pose count differs from joint count");
    std::vector<RigidTransform> blend(joints);
    for (std::size_t j = 0; j < joints; ++j) blend[j] = poses[j] * rig.chain.bind_poses[j].inverse();

    Points out(rig.tongue.vertices.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        const Vec3& p = rig.tongue.vertices[v];
        const auto row = static_cast<Eigen::Index>(v);
        Vec3 acc = Vec3::Zero();
        double total = 0.0;
        for (std::size_t j = 0; j < joints; ++j) {
            const double w = rig.weights.w(row, static_cast<Eigen::Index>(j));
            if (w == 0.0) continue;
            acc += w * blend[j].apply(p);
            total += w;
        }
        out[v] = total > 0.0 ? acc : p;
    }
    return out;
}

RigidTransform jaw_transform(const JawHinge& hinge, const Vec3& jaw_coil) {
    const Vec3& d = hinge.axis_direction;
    Vec3 b = hinge.coil_bind_position - hinge.axis_point;
    Vec3 c = jaw_coil - hinge.axis_point;
    b -= b.dot(d) * d;
    c -= c.dot(d) * d;
    if (b.norm() < 1e-9 || c.norm() < 1e-9) throw NumericError("jaw coil lies on the hinge axis; angle undefined");
    const double angle = std::atan2(d.dot(b.cross(c)), b.dot(c));
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(angle, d).toRotationMatrix();
    t.translation = hinge.axis_point - t.rotation * hinge.axis_point;
    return t;
}

RigidTransform jaw_transform(const Rig& rig, const Vec3& jaw_coil) {
    if (!rig.jaw) throw ValidationError("rig has no jaw hinge configured");
    return jaw_transform(*rig.jaw, jaw_coil);
}

}  // namespace ema
