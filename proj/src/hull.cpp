#include "ema/errors.hpp"
#include "ema/register.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace ema {

namespace {

struct Facet {
    std::array<int, 3> v;
    Vec3 normal;
    double offset;  // normal . x = offset on the plane
    bool alive = true;
};

Facet make_facet(const Points& pts, int a, int b, int c) {
    Facet f{{a, b, c}, (pts[b] - pts[a]).cross(pts[c] - pts[a]), 0.0};
    f.normal.normalize();
    f.offset = f.normal.dot(pts[a]);
    return f;
}

std::uint64_t directed(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

ConvexHull convex_hull_3d(const Points& pts) {
    if (pts.size() < 4) throw NumericError("convex hull needs at least 4 points");
    Eigen::AlignedBox3d box;
    for (const auto& p : pts) {
        if (!p.allFinite()) throw ValidationError("non-finite point in hull input");
        box.extend(p);
    }
    const double scale = std::max(box.sizes().maxCoeff(), 1e-300);
    const double eps = 1e-11 * scale;

    // Initial tetrahedron from extreme points.
    const int n = static_cast<int>(pts.size());
    int i0 = 0;
    for (int i = 1; i < n; ++i)
        if (pts[i].x() < pts[i0].x()) i0 = i;
    int i1 = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = (pts[i] - pts[i0]).norm();
        if (d > best) best = d, i1 = i;
    }
    if (i1 < 0 || best <= eps) throw NumericError("convex hull input is degenerate (all points coincide)");
    const Vec3 dir = (pts[i1] - pts[i0]).normalized();
    int i2 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec3 r = pts[i] - pts[i0];
        const double d = (r - r.dot(dir) * dir).norm();
        if (d > best) best = d, i2 = i;
    }
    if (i2 < 0 || best <= eps) throw NumericError("convex hull input is degenerate (collinear points)");
    const Vec3 pn = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    int i3 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs((pts[i] - pts[i0]).dot(pn));
        if (d > best) best = d, i3 = i;
    }
    if (i3 < 0 || best <= eps) throw NumericError("convex hull input is degenerate (coplanar points)");

    std::vector<Facet> facets;
    std::unordered_map<std::uint64_t, int> edge_owner;  // directed edge -> facet
    auto add = [&](int a, int b, int c) {
        const int id = static_cast<int>(facets.size());
        facets.push_back(make_facet(pts, a, b, c));
        edge_owner[directed(a, b)] = id;
        edge_owner[directed(b, c)] = id;
        edge_owner[directed(c, a)] = id;
    };
    if ((pts[i3] - pts[i0]).dot(pn) > 0.0) std::swap(i1, i2);  // i3 must lie below (i0, i1, i2)
    add(i0, i1, i2);
    add(i0, i3, i1);
    add(i1, i3, i2);
    add(i2, i3, i0);

    std::vector<int> visible;
    std::vector<std::array<int, 2>> horizon;
    for (int p = 0; p < n; ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;
        visible.clear();
        for (int f = 0; f < static_cast<int>(facets.size()); ++f)
            if (facets[f].alive && facets[f].normal.dot(pts[p]) - facets[f].offset > eps) visible.push_back(f);
        if (visible.empty()) continue;

        for (int f : visible) facets[f].alive = false;
        horizon.clear();
        for (int f : visible) {
            const auto& v = facets[f].v;
            for (int k = 0; k < 3; ++k) {
                const int a = v[k], b = v[(k + 1) % 3];
                const int across = edge_owner.at(directed(b, a));
                if (facets[across].alive) horizon.push_back({a, b});
            }
        }
        for (int f : visible) {
            const auto& v = facets[f].v;
            for (int k = 0; k < 3; ++k) {
                auto it = edge_owner.find(directed(v[k], v[(k + 1) % 3]));
                if (it != edge_owner.end() && it->second == f) edge_owner.erase(it);
            }
        }
        for (const auto& [a, b] : horizon) add(a, b, p);
    }

    ConvexHull hull;
    std::map<int, int> reindex;
    for (const auto& f : facets)
        if (f.alive)
            for (int v : f.v) reindex.emplace(v, 0);
    for (auto& [src, dst] : reindex) {
        dst = static_cast<int>(hull.mesh.vertices.size());
        hull.mesh.vertices.push_back(pts[static_cast<std::size_t>(src)]);
        hull.input_index.push_back(static_cast<std::size_t>(src));
    }
    for (const auto& f : facets)
        if (f.alive) hull.mesh.faces.push_back({reindex[f.v[0]], reindex[f.v[1]], reindex[f.v[2]]});
    return hull;
}

std::vector<Polyline> plane_mesh_intersection(const TriMesh& m, const Plane& plane) {
    if (m.faces.empty()) throw ValidationError("plane intersection with an empty mesh");
    std::vector<double> dist(m.vertices.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) dist[i] = plane.signed_distance(m.vertices[i]);

    // Crossing keys: a vertex lying on the plane is (v, v), an edge (min, max).
    using Key = std::pair<int, int>;
    std::map<Key, Vec3> point_of;
    std::vector<std::array<Key, 2>> segments;
    auto crossing = [&](int u, int v) -> Key {
        if (dist[u] < 0.0) std::swap(u, v);  // u is on the non-negative side
        Key key;
        Vec3 p;
        if (dist[u] == 0.0) {
            key = {u, u};
            p = m.vertices[u];
        } else {
            const double t = dist[u] / (dist[u] - dist[v]);
            key = {std::min(u, v), std::max(u, v)};
            p = m.vertices[u] + t * (m.vertices[v] - m.vertices[u]);
        }
        p -= plane.signed_distance(p) * plane.normal;
        point_of.emplace(key, p);
        return key;
    };
    for (const auto& f : m.faces) {
        std::array<Key, 2> seg;
        int found = 0;
        for (int k = 0; k < 3; ++k) {
            const int a = f[k], b = f[(k + 1) % 3];
            if ((dist[a] >= 0.0) != (dist[b] >= 0.0)) seg[found++] = crossing(a, b);
        }
        if (found == 2 && seg[0] != seg[1]) segments.push_back(seg);
    }

    std::map<Key, std::vector<std::size_t>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s)
        for (const auto& k : segments[s]) incident[k].push_back(s);

    std::vector<bool> used(segments.size(), false);
    std::vector<Polyline> out;
    auto walk = [&](std::size_t first, Key start) {
        Polyline line;
        line.points.push_back(point_of[start]);
        Key cur = start;
        std::size_t s = first;
        for (;;) {
            used[s] = true;
            cur = segments[s][0] == cur ? segments[s][1] : segments[s][0];
            if (cur == start) {
                line.closed = true;
                break;
            }
            line.points.push_back(point_of[cur]);
            auto next = std::find_if(incident[cur].begin(), incident[cur].end(), [&](std::size_t t) { return !used[t]; });
            if (next == incident[cur].end()) break;
            s = *next;
        }
        out.push_back(std::move(line));
    };
    // Open chains start at their endpoints; whatever remains is closed loops.
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        for (const auto& k : segments[s])
            if (incident[k].size() == 1 && !used[s]) walk(s, k);
    }
    for (std::size_t s = 0; s < segments.size(); ++s)
        if (!used[s]) walk(s, segments[s][0]);
    return out;
}

}  // namespace ema
