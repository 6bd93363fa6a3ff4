#pragma once

#include "ema/mesh.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace ema {

struct ClosestPoint {
    Vec3 point = Vec3::Zero();
    std::size_t face = 0;
    double distance = 0.0;
};

// Nearest point of triangle (a, b, c) to p, covering the vertex, edge and
// interior regions.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Axis-aligned bounding volume hierarchy over the triangles of a mesh.
// The mesh is copied, so the index is self-contained and immutable.
class TriangleIndex {
public:
    explicit TriangleIndex(TriMesh mesh);

    ClosestPoint closest(const Vec3& p) const;
    const TriMesh& mesh() const { return mesh_; }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        int left = -1;   // child nodes, or -1 for a leaf
        int right = -1;
        std::size_t begin = 0;  // leaf triangle range into order_
        std::size_t end = 0;
    };

    int build(std::size_t begin, std::size_t end);

    TriMesh mesh_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

// Globally nearest point over all triangles of `m`.
ClosestPoint closest_point_on_mesh(const TriMesh& m, const Vec3& p);

}  // namespace ema
