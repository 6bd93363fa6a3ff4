#include "doctest.h"
#include "test_support.hpp"

#include "ema/errors.hpp"
#include "ema/register.hpp"

#include <map>

using namespace ema;

namespace {

Points cube_corners(double lo, double hi) {
    Points p;
    for (int i = 0; i < 8; ++i) p.emplace_back(i & 1 ? hi : lo, i & 2 ? hi : lo, i & 4 ? hi : lo);
    return p;
}

void check_contains(const ConvexHull& h, const Points& pts) {
    for (std::size_t f = 0; f < h.mesh.faces.size(); ++f) {
        const Vec3 n = face_normal(h.mesh, f);
        const Vec3& a = h.mesh.vertices[h.mesh.faces[f][0]];
        for (const auto& p : pts) CHECK(n.dot(p - a) <= 1e-9);
    }
    for (std::size_t v = 0; v < h.mesh.vertices.size(); ++v) CHECK(h.mesh.vertices[v] == pts[h.input_index[v]]);
}

double polyline_length(const Polyline& l) {
    double len = 0.0;
    for (std::size_t i = 1; i < l.points.size(); ++i) len += (l.points[i] - l.points[i - 1]).norm();
    if (l.closed && l.points.size() > 1) len += (l.points.front() - l.points.back()).norm();
    return len;
}

CoilTrajectorySet frames_of(const std::vector<std::string>& coils, const std::vector<Points>& frames) {
    std::vector<double> ts;
    std::vector<std::vector<CoilSample>> rows;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        ts.push_back(0.005 * static_cast<double>(f));
        std::vector<CoilSample> row;
        for (const auto& p : frames[f]) row.push_back({p, Vec3::UnitZ()});
        rows.push_back(row);
    }
    return CoilTrajectorySet::make(coils, ts, rows);
}

}  // namespace

TEST_CASE("hull: cube corners") {
    const Points pts = cube_corners(0, 1);
    const auto h = convex_hull_3d(pts);
    CHECK(h.mesh.vertices.size() == 8);
    CHECK(h.mesh.faces.size() == 12);
    check_contains(h, pts);

    Points with_centre = pts;
    with_centre.push_back(Vec3::Constant(0.5));
    const auto h2 = convex_hull_3d(with_centre);
    CHECK(h2.mesh.vertices.size() == 8);
    CHECK(h2.mesh.faces.size() == 12);
    CHECK(std::find(h2.input_index.begin(), h2.input_index.end(), 8u) == h2.input_index.end());
}

TEST_CASE("hull: matches the brute-force facet oracle") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + static_cast<std::size_t>(trial) % 47;
        Points pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(testing::random_point(rng, -10, 10));
        const auto h = convex_hull_3d(pts);
        CHECK(testing::hull_facets(h) == testing::brute_force_hull_facets(pts));
        check_contains(h, pts);
        const auto v = static_cast<long>(h.mesh.vertices.size()), f = static_cast<long>(h.mesh.faces.size());
        CHECK(v - 3 * f / 2 + f == 2);
    }
}

TEST_CASE("hull: degenerate inputs") {
    CHECK_THROWS_AS(convex_hull_3d({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}), NumericError);
    CHECK_THROWS_AS(convex_hull_3d({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(2, 3, 0)}), NumericError);
    CHECK_THROWS_AS(convex_hull_3d({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(3, 3, 3)}), NumericError);
    CHECK_THROWS_AS(convex_hull_3d(Points(5, Vec3(1, 2, 3))), NumericError);
}

TEST_CASE("hull: coplanar points on faces are not promoted") {
    Points pts = cube_corners(0, 2);
    pts.push_back(Vec3(1, 1, 0));  // face centre
    pts.push_back(Vec3(1, 0, 0));  // edge midpoint
    const auto h = convex_hull_3d(pts);
    CHECK(h.mesh.vertices.size() == 8);
    check_contains(h, pts);
}

TEST_CASE("plane section: unit cube at x = 0.5") {
    const TriMesh cube = triangulate(make_cube(1.0));
    const auto lines = plane_mesh_intersection(cube, Plane::through(Vec3(0.5, 0, 0), Vec3::UnitX()));
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].closed);
    CHECK(polyline_length(lines[0]) == doctest::Approx(4.0).epsilon(1e-12));
    for (const auto& p : lines[0].points) CHECK(std::abs(p.x() - 0.5) <= 1e-9);
}

TEST_CASE("plane section: disjoint and tangent planes are empty") {
    const TriMesh cube = triangulate(make_cube(1.0));
    CHECK(plane_mesh_intersection(cube, Plane::through(Vec3(3, 0, 0), Vec3::UnitX())).empty());
    CHECK(plane_mesh_intersection(cube, Plane::through(Vec3::Zero(), Vec3(1, 1, 1))).empty());
    CHECK(plane_mesh_intersection(cube, Plane::through(Vec3(1, 1, 1), Vec3(1, 1, 1))).empty());
    CHECK(plane_mesh_intersection(cube, Plane::through(Vec3(0, 0, 0), Vec3::UnitX())).empty());
    // A face lying in the plane counts as just above it: x = 1 keeps that face's outline.
    const auto face = plane_mesh_intersection(cube, Plane::through(Vec3(1, 0, 0), Vec3::UnitX()));
    REQUIRE(face.size() == 1);
    CHECK(polyline_length(face[0]) == doctest::Approx(4.0));
    CHECK_THROWS_AS(plane_mesh_intersection(TriMesh{}, Plane{}), ValidationError);
}

TEST_CASE("plane section: points on plane for random cuts, vertex crossings") {
    std::mt19937 rng(8);
    const TriMesh sphere = make_icosphere(10.0, 3);
    for (int i = 0; i < 50; ++i) {
        const Plane pl = Plane::through(testing::random_point(rng, -5, 5), testing::random_unit(rng));
        const auto lines = plane_mesh_intersection(sphere, pl);
        REQUIRE(lines.size() == 1);
        CHECK(lines[0].closed);
        for (const auto& p : lines[0].points) CHECK(std::abs(pl.signed_distance(p)) <= 1e-9);
    }
    // Cutting through mesh vertices: the cube diagonal plane passes through four corners.
    const TriMesh cube = triangulate(make_cube(1.0));
    const auto lines = plane_mesh_intersection(cube, Plane::through(Vec3::Zero(), Vec3(1, -1, 0)));
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].closed);
    CHECK(polyline_length(lines[0]) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("plane section: open mesh gives an open chain") {
    const TriMesh strip{{Vec3(-1, 0, 0), Vec3(1, 0, 0), Vec3(-1, 1, 0), Vec3(1, 1, 0)}, {{0, 1, 2}, {1, 3, 2}}};
    const auto lines = plane_mesh_intersection(strip, Plane::through(Vec3::Zero(), Vec3::UnitX()));
    REQUIRE(lines.size() == 1);
    CHECK_FALSE(lines[0].closed);
    CHECK(polyline_length(lines[0]) == doctest::Approx(1.0));
}

TEST_CASE("palate: cube corners give the upper edge of the section") {
    // Four coils, two frames: the eight corners of [-1,1] x [0,2] x [0,2].
    const auto set = frames_of({"T1", "T2", "T3", "T4"},
                               {{Vec3(-1, 0, 0), Vec3(1, 0, 0), Vec3(-1, 2, 0), Vec3(1, 2, 0)},
                                {Vec3(-1, 0, 2), Vec3(1, 0, 2), Vec3(-1, 2, 2), Vec3(1, 2, 2)}});
    const auto cloud = palate_contour(set, {"T1", "T2", "T3", "T4"}, parse_plane("x=0"));
    REQUIRE(cloud.points.size() >= 2);
    double zmin = 1e9, zmax = -1e9;
    for (const auto& p : cloud.points) {
        CHECK(std::abs(p.x()) <= 1e-9);
        CHECK(p.y() == doctest::Approx(2.0));
        zmin = std::min(zmin, p.z());
        zmax = std::max(zmax, p.z());
    }
    CHECK(zmin == doctest::Approx(0.0));
    CHECK(zmax == doctest::Approx(2.0));
}

TEST_CASE("palate: one kept frame, degenerate coils, bad inputs") {
    const Points tetra = {Vec3(-1, 0, 0), Vec3(1, 0.5, 0), Vec3(0, 3, 1), Vec3(0.2, 1, 4)};
    const auto set = frames_of({"a", "b", "c", "d"}, {tetra, {Vec3(-5, 0, 0), Vec3(5, 0, 0), Vec3(0, 9, 0), Vec3(0, 0, 9)}});
    PalateOptions opt;
    opt.subsample = set.frame_count();
    const auto cloud = palate_contour(set, {"a", "b", "c", "d"}, parse_plane("x=0"), opt);
    const auto hull = convex_hull_3d(tetra);
    for (const auto& p : cloud.points) CHECK(testing::oracle_mesh_distance(hull.mesh, p) <= 1e-9);

    const auto flat = frames_of({"T1", "T2", "T3"}, {{Vec3(2, 0, 0), Vec3(2, 1, 0), Vec3(2, 0, 1)},
                                                     {Vec3(2, 1, 1), Vec3(2, 2, 0), Vec3(2, 0, 3)}});
    CHECK_THROWS_AS(palate_contour(flat, {"T1", "T2", "T3"}, parse_plane("x=0")), NumericError);
    CHECK_THROWS_AS(palate_contour(set, {"zz"}, parse_plane("x=0")), ValidationError);
    CHECK_THROWS_AS(palate_contour(set, {}, parse_plane("x=0")), ValidationError);
}

TEST_CASE("palate: rigid equivariance") {
    std::mt19937 rng(77);
    TrajectorySynthSpec spec;
    spec.coils = {{"T1", Vec3(0, 10, 30), Vec3(3, 4, 5), Vec3(1, 2, 3), Vec3(0, 0.4, 0.8)},
                  {"T2", Vec3(1, 14, 15), Vec3(4, 5, 3), Vec3(2, 1.5, 1), Vec3(0.5, 0, 1.1)},
                  {"T3", Vec3(-1, 12, 0), Vec3(5, 3, 4), Vec3(1.2, 2.5, 1.7), Vec3(1, 0.2, 0)}};
    spec.duration = 1.0;
    const auto set = synth_trajectories(spec);
    const std::vector<std::string> coils = {"T1", "T2", "T3"};
    const auto base = palate_contour(set, coils, parse_plane("x=0"), {4, Vec3::UnitY()});
    for (int trial = 0; trial < 5; ++trial) {
        const RigidTransform t = testing::random_rigid(rng, 50.0);
        std::vector<std::vector<CoilSample>> rows;
        for (std::size_t f = 0; f < set.frame_count(); ++f) {
            std::vector<CoilSample> row;
            for (const auto& s : set.frame(f)) row.push_back({t.apply(s.position), s.normal});
            rows.push_back(row);
        }
        const auto moved = CoilTrajectorySet::make(set.coils(), set.timestamps(), rows);
        const auto out = palate_contour(moved, coils, Plane::through(t.translation, t.apply_vector(Vec3::UnitX())),
                                        {4, t.apply_vector(Vec3::UnitY())});
        REQUIRE(out.points.size() == base.points.size());
        for (std::size_t i = 0; i < out.points.size(); ++i) CHECK((out.points[i] - t.apply(base.points[i])).norm() <= 1e-9);
    }
}
