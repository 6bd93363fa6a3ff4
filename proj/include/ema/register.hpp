#pragma once

#include "ema/closest_point.hpp"
#include "ema/mesh.hpp"
#include "ema/trackio.hpp"
#include "ema/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ema {

struct Plane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();  // unit

    static Plane through(const Vec3& point, const Vec3& normal);  // normalizes, rejects zero normals
    double signed_distance(const Vec3& p) const { return (p - point).dot(normal); }
};

// Parses "x=0", "y=-3.5", "z=10" or "px,py,pz,nx,ny,nz".
Plane parse_plane(std::string_view spec);

// Rotation then translation: p -> R p + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_vector(const Vec3& v) const { return rotation * v; }
    Points apply(const Points& pts) const;
    RigidTransform inverse() const;
    // (*this * other)(p) = this->apply(other.apply(p))
    RigidTransform operator*(const RigidTransform& other) const;

    bool is_valid(double tol = 1e-9) const;
    double rotation_angle() const;  // radians, in [0, pi]
};

// 12 numbers: rotation row-major, then translation.
std::string write_transform(const RigidTransform& t);
RigidTransform parse_transform(std::string_view text);

// Rotation angle (rad) between two rotations and translation distance (mm).
double rotation_error(const RigidTransform& a, const RigidTransform& b);
double translation_error(const RigidTransform& a, const RigidTransform& b);

struct PointCloud {
    Points points;
    std::string label;
};

struct ConvexHull {
    TriMesh mesh;                            // outward-oriented triangles
    std::vector<std::size_t> input_index;    // mesh vertex -> index of the input point
};

// Incremental 3D convex hull. Points coplanar with an existing facet are
// not promoted to hull vertices.
ConvexHull convex_hull_3d(const Points& points);

struct Polyline {
    Points points;
    bool closed = false;
};

// Chains triangle/plane crossings into polylines. A vertex lying exactly on
// the plane is classified as infinitesimally above it, so isolated point
// contacts produce no output.
std::vector<Polyline> plane_mesh_intersection(const TriMesh& m, const Plane& plane);

struct PalateOptions {
    std::size_t subsample = 1;    // keep every n-th frame
    Vec3 up = Vec3::UnitY();      // vertical axis selecting the upper branch
};

// Upper branch of the midsagittal section through the convex hull of the
// pooled tongue-coil positions, ordered by increasing abscissa.
PointCloud palate_contour(const CoilTrajectorySet& set, const std::vector<std::string>& tongue_coils,
                          const Plane& plane, const PalateOptions& options = {});

// Least-squares rigid alignment (no scale) of index-matched point sets.
RigidTransform umeyama_rigid(const Points& src, const Points& dst);

double rms_distance(const Points& a, const Points& b);

struct IcpParams {
    int max_iterations = 100;
    double convergence_eps = 1e-10;  // stop when RMS improves by less than this (mm)
};

struct IcpResult {
    RigidTransform transform;
    double rms = 0.0;                 // mm
    std::vector<double> rms_history;  // RMS of each evaluated transform, first entry = init
    int iterations = 0;
};

// Point-to-surface ICP: closest points on `target`, then a rigid update.
IcpResult icp_point_to_mesh(const Points& src, const TriangleIndex& target, const RigidTransform& init,
                            const IcpParams& params = {});
IcpResult icp_point_to_mesh(const Points& src, const TriMesh& target, const RigidTransform& init,
                            const IcpParams& params = {});

}  // namespace ema
