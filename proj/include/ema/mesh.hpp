#pragma once

#include "ema/types.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace ema {

using Tri = std::array<int, 3>;
using Quad = std::array<int, 4>;

struct TriMesh {
    Points vertices;  // mm
    std::vector<Tri> faces;

    bool operator==(const TriMesh&) const = default;
};

struct QuadMesh {
    Points vertices;  // mm
    std::vector<Quad> faces;

    bool operator==(const QuadMesh&) const = default;
};

// Throws ValidationError on out-of-range or repeated face indices.
void validate(const TriMesh& m);
void validate(const QuadMesh& m);

// Splits every quad (a,b,c,d) into (a,b,c) and (a,c,d).
TriMesh triangulate(const QuadMesh& m);

// Merges vertices sharing the cell floor(p / eps) (exact equality for
// eps == 0); faces are reindexed and degenerate ones removed. The first
// vertex of each group keeps its position.
TriMesh deduplicate_vertices(const TriMesh& m, double eps);

// Uniform-grid vertex clustering with cells anchored at the bounding-box
// minimum; each occupied cell collapses to its centroid. Degenerate and
// duplicate faces are removed.
TriMesh decimate_cluster(const TriMesh& m, double cell);

// Catmull-Clark subdivision. Boundary edges use the cubic B-spline curve
// rule; edges shared by more than two faces are rejected.
QuadMesh catmull_clark(const QuadMesh& m, int levels);

struct EdgeCounts {
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t faces = 0;
};
EdgeCounts count_elements(const QuadMesh& m);

// Projects every cage vertex onto its closest point on `target`.
QuadMesh shrinkwrap(const QuadMesh& cage, const TriMesh& target);

// Area-weighted outward face normal sum at each vertex, normalized.
Points vertex_normals(const TriMesh& m);
Vec3 face_normal(const TriMesh& m, std::size_t face);

Vec3 centroid(const Points& pts);

// Primitive generators used by fixtures and the synth command.
QuadMesh make_cube(double size = 1.0);                       // [0,size]^3, outward quads
TriMesh make_icosphere(double radius, int subdivisions);     // centred at origin
// Closed upper half-ellipsoid (y >= 0) with a flat base, semi-axes in mm.
TriMesh make_half_ellipsoid(const Vec3& semi_axes, int rings, int segments);

}  // namespace ema
