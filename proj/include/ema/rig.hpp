#pragma once

#include "ema/mesh.hpp"
#include "ema/register.hpp"
#include "ema/spline.hpp"
#include "ema/trackio.hpp"

#include <Eigen/Core>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ema {

// Coil positions at one instant, keyed by coil name.
using CoilFrame = std::map<std::string, Vec3, std::less<>>;

CoilFrame coil_frame(const CoilTrajectorySet& set, std::size_t frame);

// A spline control point slaved to a coil: control = coil + bind_offset.
struct Hook {
    std::string coil;
    std::size_t control_index = 0;
    Vec3 bind_offset = Vec3::Zero();
};

// Joint pose: rotation columns are the joint axes (Z along the spline
// tangent), translation is the joint head.
using JointPose = RigidTransform;

struct JointChain {
    std::vector<double> stations;        // J + 1 bind arc-length stations (mm)
    std::vector<JointPose> bind_poses;   // J
    Mat3 root_frame = Mat3::Identity();  // bind frame at the spline root

    std::size_t joint_count() const { return bind_poses.size(); }
};

// Capsule of influence around one joint's bind segment.
struct Capsule {
    Vec3 head = Vec3::Zero();
    Vec3 tail = Vec3::Zero();
    double r_in = 5.0;   // full weight inside
    double r_out = 15.0; // zero weight outside
};

struct SkinWeights {
    Eigen::MatrixXd w;                    // vertex x joint
    std::vector<std::size_t> unskinned;   // vertices outside every envelope
};

struct JawHinge {
    Vec3 axis_point = Vec3::Zero();
    Vec3 axis_direction = Vec3::UnitX();  // unit
    std::string coil;
    Vec3 coil_bind_position = Vec3::Zero();
};

struct HingeConfig {
    Vec3 point = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();
    std::string coil = "jaw";
};

struct RigConfig {
    std::vector<std::string> hook_coils;  // root to tip, e.g. T3, T2, T1
    Vec3 root_anchor = Vec3::Zero();
    Vec3 tip_anchor = Vec3::Zero();
    int joint_count = 8;
    double r_in = 5.0;
    double r_out = 15.0;
    bool smoothstep = false;
    double depth = 2.0;                  // mm inward along the local surface normal
    std::optional<Vec3> depth_vector;    // fixed offset instead of the normal-based depth
    std::optional<std::string> anchor_coil;  // anchors follow this coil; static when unset
    std::optional<HingeConfig> hinge;
};

struct Rig {
    TriMesh tongue;                      // bind pose
    CubicBSpline spline{Points(4, Vec3::Zero())};
    std::vector<Hook> hooks;
    JointChain chain;
    std::vector<Capsule> envelopes;
    SkinWeights weights;
    std::optional<JawHinge> jaw;
    TriMesh mandible;                    // bind pose, may be empty
    TriMesh maxilla;                     // static, may be empty
    CoilFrame bind_frame;
    RigConfig config;
};

// Full rigging: spline with hooks, equal arc-length joint chain,
// envelope weights, jaw hinge.
Rig build_rig(const TriMesh& tongue, const CoilFrame& bind_frame, const RigConfig& cfg, TriMesh mandible = {},
              TriMesh maxilla = {});

// Parallel-transported joint frames at `stations` along `spline`, starting
// from `root_frame` at the spline root.
std::vector<JointPose> place_joints(const CubicBSpline& spline, const std::vector<double>& stations,
                                    const Mat3& root_frame);

double distance_to_segment(const Vec3& p, const Vec3& a, const Vec3& b);

SkinWeights envelope_weights(const std::vector<Capsule>& envelopes, const TriMesh& mesh, bool smoothstep = false);

// Spline for a coil frame: hooked control points follow their coils.
CubicBSpline deform_spline(const Rig& rig, const CoilFrame& frame);

std::vector<JointPose> solve_spline_ik(const Rig& rig, const CoilFrame& frame);

// Linear blend skinning of the bind tongue.
Points skin(const Rig& rig, const std::vector<JointPose>& poses);

RigidTransform jaw_transform(const Rig& rig, const Vec3& jaw_coil);
RigidTransform jaw_transform(const JawHinge& hinge, const Vec3& jaw_coil);

}  // namespace ema
