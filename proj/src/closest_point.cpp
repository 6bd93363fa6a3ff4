#include "ema/closest_point.hpp"

#include "ema/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ema {

namespace {

constexpr std::size_t kLeafSize = 4;

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return a;
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

}  // namespace

// Region tests over the triangle's Voronoi regions (vertex, edge, face).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = va + vb + vc;
    if (!(denom > 0.0)) {
        // Zero-area triangle: nearest of its three edges.
        Vec3 best = closest_on_segment(p, a, b);
        for (const Vec3& q : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)})
            if ((q - p).squaredNorm() < (best - p).squaredNorm()) best = q;
        return best;
    }
    const double v = vb / denom, w = vc / denom;
    return a + v * ab + w * ac;
}

TriangleIndex::TriangleIndex(TriMesh mesh) : mesh_(std::move(mesh)) {
    if (mesh_.faces.empty()) throw ValidationError("closest-point query on an empty mesh");
    validate(mesh_);
    order_.resize(mesh_.faces.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * mesh_.faces.size() / kLeafSize + 1);
    build(0, order_.size());
}

int TriangleIndex::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, centres;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& f = mesh_.faces[order_[i]];
        Vec3 c = Vec3::Zero();
        for (int v : f) {
            box.extend(mesh_.vertices[v]);
            c += mesh_.vertices[v];
        }
        centres.extend(c / 3.0);
    }
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    int axis = 0;
    centres.sizes().maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    auto centre = [&](std::size_t f) {
        const auto& t = mesh_.faces[f];
        return mesh_.vertices[t[0]][axis] + mesh_.vertices[t[1]][axis] + mesh_.vertices[t[2]][axis];
    };
    std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                     order_.begin() + static_cast<long>(end),
                     [&](std::size_t x, std::size_t y) { return centre(x) < centre(y) || (centre(x) == centre(y) && x < y); });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

ClosestPoint TriangleIndex::closest(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    ClosestPoint result;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (node.box.squaredExteriorDistance(p) > best) continue;
        if (node.left < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t f = order_[i];
                const auto& t = mesh_.faces[f];
                const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]);
                const double d2 = (q - p).squaredNorm();
                if (d2 < best || (d2 == best && f < result.face)) {
                    best = d2;
                    result.point = q;
                    result.face = f;
                }
            }
            continue;
        }
        const double dl = nodes_[static_cast<std::size_t>(node.left)].box.squaredExteriorDistance(p);
        const double dr = nodes_[static_cast<std::size_t>(node.right)].box.squaredExteriorDistance(p);
        // Push the farther child first so the nearer one is explored first.
        if (dl <= dr) {
            stack.push_back(node.right);
            stack.push_back(node.left);
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
    result.distance = std::sqrt(best);
    return result;
}

ClosestPoint closest_point_on_mesh(const TriMesh& m, const Vec3& p) { return TriangleIndex(m).closest(p); }

}  // namespace ema
