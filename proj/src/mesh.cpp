#include "ema/mesh.hpp"

#include "ema/closest_point.hpp"
#include "ema/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

namespace ema {

namespace {

template <std::size_t N>
void validate_faces(const Points& vertices, const std::vector<std::array<int, N>>& faces) {
    const auto n = static_cast<long>(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        for (std::size_t k = 0; k < N; ++k) {
            if (face[k] < 0 || face[k] >= n)
                throw ValidationError("face " + std::to_string(f) + " index " + std::to_string(face[k]) + " out of range");
            for (std::size_t j = 0; j < k; ++j)
                if (face[j] == face[k]) throw ValidationError("face " + std::to_string(f) + " is degenerate");
        }
    }
}

bool degenerate(const Tri& t) { return t[0] == t[1] || t[1] == t[2] || t[0] == t[2]; }

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

// Flips faces whose normal points towards `inside`; valid for star-shaped meshes.
void orient_outward(TriMesh& m, const Vec3& inside) {
    for (auto& f : m.faces) {
        const Vec3& a = m.vertices[f[0]];
        const Vec3& b = m.vertices[f[1]];
        const Vec3& c = m.vertices[f[2]];
        const Vec3 n = (b - a).cross(c - a);
        if (n.dot((a + b + c) / 3.0 - inside) < 0.0) std::swap(f[1], f[2]);
    }
}

}  // namespace

void validate(const TriMesh& m) { validate_faces(m.vertices, m.faces); }
void validate(const QuadMesh& m) { validate_faces(m.vertices, m.faces); }

TriMesh triangulate(const QuadMesh& m) {
    TriMesh out;
    out.vertices = m.vertices;
    out.faces.reserve(2 * m.faces.size());
    for (const auto& q : m.faces) {
        out.faces.push_back({q[0], q[1], q[2]});
        out.faces.push_back({q[0], q[2], q[3]});
    }
    return out;
}

TriMesh deduplicate_vertices(const TriMesh& m, double eps) {
    if (!(eps >= 0.0)) throw ValidationError("deduplication epsilon must be non-negative");
    std::map<std::array<double, 3>, int> cells;
    std::vector<int> remap(m.vertices.size());
    TriMesh out;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const Vec3& p = m.vertices[i];
        std::array<double, 3> key;
        for (int k = 0; k < 3; ++k) key[k] = eps > 0.0 ? std::floor(p[k] / eps) : p[k] + 0.0;
        auto [it, inserted] = cells.try_emplace(key, static_cast<int>(out.vertices.size()));
        if (inserted) out.vertices.push_back(p);
        remap[i] = it->second;
    }
    for (const auto& f : m.faces) {
        Tri t{remap[f[0]], remap[f[1]], remap[f[2]]};
        if (!degenerate(t)) out.faces.push_back(t);
    }
    return out;
}

TriMesh decimate_cluster(const TriMesh& m, double cell) {
    if (!(cell > 0.0)) throw ValidationError("decimation cell size must be positive");
    if (m.vertices.empty()) return m;
    Vec3 lo = m.vertices.front();
    for (const auto& p : m.vertices) lo = lo.cwiseMin(p);

    std::map<std::array<long long, 3>, int> cells;
    std::vector<int> remap(m.vertices.size());
    Points sums;
    std::vector<int> counts;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const Vec3 rel = (m.vertices[i] - lo) / cell;
        std::array<long long, 3> key;
        for (int k = 0; k < 3; ++k) key[k] = static_cast<long long>(std::floor(rel[k]));
        auto [it, inserted] = cells.try_emplace(key, static_cast<int>(sums.size()));
        if (inserted) {
            sums.push_back(Vec3::Zero());
            counts.push_back(0);
        }
        sums[it->second] += m.vertices[i];
        counts[it->second] += 1;
        remap[i] = it->second;
    }
    TriMesh out;
    out.vertices.resize(sums.size());
    for (std::size_t c = 0; c < sums.size(); ++c) out.vertices[c] = sums[c] / counts[c];

    std::set<std::array<int, 3>> seen;
    for (const auto& f : m.faces) {
        Tri t{remap[f[0]], remap[f[1]], remap[f[2]]};
        if (degenerate(t)) continue;
        Tri sorted = t;
        std::sort(sorted.begin(), sorted.end());
        if (seen.insert(sorted).second) out.faces.push_back(t);
    }
    return out;
}

EdgeCounts count_elements(const QuadMesh& m) {
    std::set<std::uint64_t> edges;
    for (const auto& q : m.faces)
        for (int k = 0; k < 4; ++k) edges.insert(edge_key(q[k], q[(k + 1) % 4]));
    return {m.vertices.size(), edges.size(), m.faces.size()};
}

QuadMesh catmull_clark(const QuadMesh& m, int levels) {
    if (levels < 0) throw ValidationError("subdivision levels must be non-negative");
    validate(m);
    QuadMesh cur = m;
    for (int level = 0; level < levels; ++level) {
        const std::size_t nv = cur.vertices.size();
        const std::size_t nf = cur.faces.size();

        std::unordered_map<std::uint64_t, int> edge_id;
        std::vector<std::array<int, 2>> edge_verts;
        std::vector<std::vector<int>> edge_faces;
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& q = cur.faces[f];
            for (int k = 0; k < 4; ++k) {
                const int a = q[k], b = q[(k + 1) % 4];
                auto [it, inserted] = edge_id.try_emplace(edge_key(a, b), static_cast<int>(edge_verts.size()));
                if (inserted) {
                    edge_verts.push_back({a, b});
                    edge_faces.emplace_back();
                }
                edge_faces[it->second].push_back(static_cast<int>(f));
                if (edge_faces[it->second].size() > 2)
                    throw ValidationError("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                          ") shared by more than two faces");
            }
        }
        const std::size_t ne = edge_verts.size();

        Points face_pts(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            Vec3 s = Vec3::Zero();
            for (int v : cur.faces[f]) s += cur.vertices[v];
            face_pts[f] = s / 4.0;
        }

        Points edge_pts(ne);
        for (std::size_t e = 0; e < ne; ++e) {
            const Vec3 mid = 0.5 * (cur.vertices[edge_verts[e][0]] + cur.vertices[edge_verts[e][1]]);
            if (edge_faces[e].size() == 2)
                edge_pts[e] = 0.5 * mid + 0.25 * (face_pts[edge_faces[e][0]] + face_pts[edge_faces[e][1]]);
            else
                edge_pts[e] = mid;
        }

        // Per-vertex accumulation of incident faces and edges.
        Points face_sum(nv, Vec3::Zero()), mid_sum(nv, Vec3::Zero());
        std::vector<int> face_n(nv, 0), edge_n(nv, 0);
        std::vector<std::vector<int>> boundary_nbrs(nv);
        for (std::size_t f = 0; f < nf; ++f)
            for (int v : cur.faces[f]) {
                face_sum[v] += face_pts[f];
                face_n[v] += 1;
            }
        for (std::size_t e = 0; e < ne; ++e) {
            const auto [a, b] = edge_verts[e];
            const Vec3 mid = 0.5 * (cur.vertices[a] + cur.vertices[b]);
            for (int v : {a, b}) {
                mid_sum[v] += mid;
                edge_n[v] += 1;
            }
            if (edge_faces[e].size() == 1) {
                boundary_nbrs[a].push_back(b);
                boundary_nbrs[b].push_back(a);
            }
        }

        QuadMesh next;
        next.vertices.reserve(nv + ne + nf);
        for (std::size_t v = 0; v < nv; ++v) {
            const Vec3& p = cur.vertices[v];
            if (edge_n[v] == 0) {
                next.vertices.push_back(p);
            } else if (!boundary_nbrs[v].empty()) {
                if (boundary_nbrs[v].size() == 2)
                    next.vertices.push_back(0.75 * p + 0.125 * (cur.vertices[boundary_nbrs[v][0]] +
                                                                cur.vertices[boundary_nbrs[v][1]]));
                else
                    next.vertices.push_back(p);  // non-manifold boundary vertex: pinned
            } else {
                const double n = edge_n[v];
                const Vec3 F = face_sum[v] / face_n[v];
                const Vec3 R = mid_sum[v] / n;
                next.vertices.push_back((F + 2.0 * R + (n - 3.0) * p) / n);
            }
        }
        next.vertices.insert(next.vertices.end(), edge_pts.begin(), edge_pts.end());
        next.vertices.insert(next.vertices.end(), face_pts.begin(), face_pts.end());

        next.faces.reserve(4 * nf);
        auto ep = [&](int a, int b) { return static_cast<int>(nv) + edge_id.at(edge_key(a, b)); };
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& q = cur.faces[f];
            const int fp = static_cast<int>(nv + ne + f);
            for (int k = 0; k < 4; ++k) {
                const int prev = q[(k + 3) % 4], v = q[k], nxt = q[(k + 1) % 4];
                next.faces.push_back({v, ep(v, nxt), fp, ep(prev, v)});
            }
        }
        cur = std::move(next);
    }
    return cur;
}

QuadMesh shrinkwrap(const QuadMesh& cage, const TriMesh& target) {
    if (target.faces.empty()) throw ValidationError("shrinkwrap target mesh is empty");
    const TriangleIndex index(target);
    QuadMesh out = cage;
    for (auto& v : out.vertices) v = index.closest(v).point;
    return out;
}

Vec3 face_normal(const TriMesh& m, std::size_t face) {
    const auto& f = m.faces.at(face);
    const Vec3 n = (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

Points vertex_normals(const TriMesh& m) {
    Points normals(m.vertices.size(), Vec3::Zero());
    for (const auto& f : m.faces) {
        const Vec3 n = (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]);
        for (int v : f) normals[v] += n;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        if (len > 0.0) n /= len;
    }
    return normals;
}

Vec3 centroid(const Points& pts) {
    if (pts.empty()) return Vec3::Zero();
    Vec3 s = Vec3::Zero();
    for (const auto& p : pts) s += p;
    return s / static_cast<double>(pts.size());
}

QuadMesh make_cube(double size) {
    QuadMesh m;
    for (int i = 0; i < 8; ++i) m.vertices.emplace_back((i & 1) * size, ((i >> 1) & 1) * size, ((i >> 2) & 1) * size);
    m.faces = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    return m;
}

TriMesh make_icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
               {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (auto& v : m.vertices) v.normalize();
    for (int s = 0; s < subdivisions; ++s) {
        std::unordered_map<std::uint64_t, int> mids;
        auto mid = [&](int a, int b) {
            auto [it, inserted] = mids.try_emplace(edge_key(a, b), static_cast<int>(m.vertices.size()));
            if (inserted) m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
            return it->second;
        };
        std::vector<Tri> faces;
        for (const auto& f : m.faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        m.faces = std::move(faces);
    }
    for (auto& v : m.vertices) v *= radius;
    orient_outward(m, Vec3::Zero());
    return m;
}

TriMesh make_half_ellipsoid(const Vec3& semi_axes, int rings, int segments) {
    if (rings < 2 || segments < 3) throw ValidationError("half-ellipsoid needs rings >= 2 and segments >= 3");
    const double a = semi_axes.x(), b = semi_axes.y(), c = semi_axes.z();
    TriMesh m;
    // Dome: apex, then rings down to the equator (y = 0).
    m.vertices.emplace_back(0.0, b, 0.0);
    for (int i = 1; i <= rings; ++i) {
        const double theta = 0.5 * std::numbers::pi * i / rings;
        for (int j = 0; j < segments; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / segments;
            m.vertices.emplace_back(a * std::sin(theta) * std::cos(phi), b * std::cos(theta),
                                    c * std::sin(theta) * std::sin(phi));
        }
    }
    auto ring = [&](int i, int j) { return 1 + (i - 1) * segments + ((j % segments) + segments) % segments; };
    for (int j = 0; j < segments; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
    for (int i = 1; i < rings; ++i)
        for (int j = 0; j < segments; ++j) {
            m.faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            m.faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    // Flat base: concentric rings inward from the equator, then a centre vertex.
    const int base_rings = std::max(1, rings / 2);
    const int equator_start = ring(rings, 0);
    int prev_start = equator_start;
    for (int k = 1; k < base_rings; ++k) {
        const double s = 1.0 - static_cast<double>(k) / base_rings;
        const int start = static_cast<int>(m.vertices.size());
        for (int j = 0; j < segments; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / segments;
            m.vertices.emplace_back(s * a * std::cos(phi), 0.0, s * c * std::sin(phi));
        }
        for (int j = 0; j < segments; ++j) {
            const int o0 = prev_start + j, o1 = prev_start + (j + 1) % segments;
            const int i0 = start + j, i1 = start + (j + 1) % segments;
            m.faces.push_back({o0, i0, i1});
            m.faces.push_back({o0, i1, o1});
        }
        prev_start = start;
    }
    const int centre = static_cast<int>(m.vertices.size());
    m.vertices.emplace_back(0.0, 0.0, 0.0);
    for (int j = 0; j < segments; ++j) m.faces.push_back({prev_start + j, centre, prev_start + (j + 1) % segments});
    orient_outward(m, Vec3(0.0, b / 3.0, 0.0));
    return m;
}

}  // namespace ema
