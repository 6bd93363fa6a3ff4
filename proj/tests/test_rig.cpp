#include "doctest.h"
#include "test_support.hpp"

#include "ema/errors.hpp"
#include "ema/rig.hpp"
#include "ema/rig_io.hpp"

#include <cmath>
#include <numbers>

using namespace ema;
using testing::tongue_fixture;

namespace {

void check_weight_rows(const SkinWeights& w) {
    for (Eigen::Index r = 0; r < w.w.rows(); ++r) {
        const double sum = w.w.row(r).sum();
        CHECK((std::abs(sum - 1.0) <= 1e-9 || sum == 0.0));
        CHECK(w.w.row(r).minCoeff() >= 0.0);
        CHECK(w.w.row(r).maxCoeff() <= 1.0);
    }
}

// Distance from p to a curve: dense sampling, then golden-section refinement.
double distance_to_curve(const CubicBSpline& s, const Vec3& p) {
    const int n = 4000;
    int best = 0;
    for (int i = 1; i <= n; ++i)
        if ((s.eval(i / double(n)) - p).norm() < (s.eval(best / double(n)) - p).norm()) best = i;
    double a = std::max(0.0, (best - 1) / double(n)), b = std::min(1.0, (best + 1) / double(n));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if ((s.eval(c) - p).norm() < (s.eval(d) - p).norm()) b = d;
        else a = c;
    }
    return (s.eval(0.5 * (a + b)) - p).norm();
}

Rig two_joint_rig(const Points& verts, double w0) {
    Rig rig;
    rig.tongue.vertices = verts;
    rig.chain.bind_poses = {RigidTransform::identity(), testing::rotation_about(Vec3::UnitY(), 40.0, Vec3(0, 0, 10))};
    rig.weights.w = Eigen::MatrixXd(static_cast<Eigen::Index>(verts.size()), 2);
    for (Eigen::Index r = 0; r < rig.weights.w.rows(); ++r) rig.weights.w.row(r) << w0, 1.0 - w0;
    return rig;
}

}  // namespace

TEST_CASE("build_rig: control points, hooks, stations") {
    const auto fx = tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    REQUIRE(rig.spline.control_points().size() == 5);
    REQUIRE(rig.hooks.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rig.hooks[i].control_index == i + 1);
        CHECK(rig.hooks[i].coil == fx.config.hook_coils[i]);
        // Default depth: 2 mm under the surface.
        CHECK(rig.hooks[i].bind_offset.norm() == doctest::Approx(2.0));
        CHECK(rig.hooks[i].bind_offset.y() < 0.0);
        CHECK(testing::oracle_mesh_distance(fx.tongue, rig.spline.control_points()[i + 1]) == doctest::Approx(2.0).epsilon(0.1));
    }
    CHECK(rig.spline.control_points().front() == fx.config.root_anchor);
    CHECK(rig.spline.control_points().back() == fx.config.tip_anchor);
    CHECK(rig.chain.joint_count() == 8);
    CHECK(rig.chain.stations.size() == 9);
    CHECK(rig.chain.stations.front() == 0.0);
    CHECK(rig.chain.stations.back() == rig.spline.arc_length());
    CHECK(rig.weights.w.rows() == static_cast<Eigen::Index>(fx.tongue.vertices.size()));
    CHECK(rig.weights.w.cols() == 8);
    check_weight_rows(rig.weights);
    REQUIRE(rig.jaw.has_value());
    CHECK(rig.jaw->coil_bind_position == fx.bind.at("jaw"));
}

TEST_CASE("build_rig: four joints on a straight 40 mm spline") {
    const auto fx = tongue_fixture();
    RigConfig cfg;
    cfg.hook_coils = {"a", "b", "c"};
    cfg.root_anchor = Vec3(0, 0, 0);
    cfg.tip_anchor = Vec3(0, 0, 40);
    cfg.joint_count = 4;
    cfg.depth_vector = Vec3::Zero();
    const CoilFrame bind{{"a", Vec3(0, 0, 10)}, {"b", Vec3(0, 0, 20)}, {"c", Vec3(0, 0, 30)}};
    const Rig rig = build_rig(fx.tongue, bind, cfg);
    const double expected[] = {0, 10, 20, 30, 40};
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(rig.chain.stations[i] - expected[i]) < 1e-6);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK((rig.chain.bind_poses[j].translation - Vec3(0, 0, expected[j])).norm() < 1e-6);
        CHECK((rig.chain.bind_poses[j].rotation.col(2) - Vec3::UnitZ()).norm() < 1e-9);
    }
}

TEST_CASE("build_rig: determinism and errors") {
    const auto fx = tongue_fixture();
    const Rig a = build_rig(fx.tongue, fx.bind, fx.config);
    const Rig b = build_rig(fx.tongue, fx.bind, fx.config);
    CHECK(a.weights.w == b.weights.w);
    CHECK(write_rig(a) == write_rig(b));

    RigConfig bad = fx.config;
    bad.joint_count = 1;
    CHECK_THROWS_AS(build_rig(fx.tongue, fx.bind, bad), ValidationError);
    bad = fx.config;
    bad.hook_coils = {"T3", "T2", "T9"};
    CHECK_THROWS_WITH_AS(build_rig(fx.tongue, fx.bind, bad), doctest::Contains("T9"), ValidationError);
    bad = fx.config;
    bad.r_in = 20.0;
    CHECK_THROWS_AS(build_rig(fx.tongue, fx.bind, bad), ValidationError);
    bad = fx.config;
    bad.hinge->coil = "chin";
    CHECK_THROWS_AS(build_rig(fx.tongue, fx.bind, bad), ValidationError);
}

TEST_CASE("envelope weights: falloff examples") {
    const Capsule a{Vec3(0, 0, 0), Vec3(10, 0, 0), 5.0, 15.0};
    const Capsule b{Vec3(0, 0, 100), Vec3(10, 0, 100), 5.0, 15.0};
    const TriMesh pts{{Vec3(5, 0, 0), Vec3(5, 10, 0), Vec3(5, 0, 50), Vec3(5, 0, 4)}, {}};
    const SkinWeights w = envelope_weights({a, b}, pts);
    CHECK(w.w(0, 0) == 1.0);
    CHECK(w.w(0, 1) == 0.0);
    CHECK(w.w(1, 0) == 1.0);  // raw 0.5, normalized 1
    CHECK(w.w.row(2).sum() == 0.0);
    CHECK(w.unskinned == std::vector<std::size_t>{2});
    CHECK(w.w(3, 0) == 1.0);

    // Equidistant in the linear band of two identical capsules.
    const Capsule c{Vec3(0, 0, 0), Vec3(10, 0, 0), 5.0, 15.0};
    const Capsule d{Vec3(0, 20, 0), Vec3(10, 20, 0), 5.0, 15.0};
    const SkinWeights half = envelope_weights({c, d}, TriMesh{{Vec3(5, 10, 0)}, {}});
    CHECK(half.w(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.w(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    // Raw falloff values before normalization, via a far-away unit-weight partner.
    const Capsule partner{Vec3(5, 10, 0), Vec3(5, 10, 0), 1.0, 2.0};
    const SkinWeights raw = envelope_weights({a, partner}, TriMesh{{Vec3(5, 10, 0)}, {}});
    CHECK(raw.w(0, 0) == doctest::Approx(0.5 / 1.5));
    const SkinWeights smooth = envelope_weights({a, partner}, TriMesh{{Vec3(5, 12.5, 0)}, {}}, true);
    const double lin = 0.25, ss = lin * lin * (3 - 2 * lin);
    CHECK(smooth.w(0, 0) == doctest::Approx(ss / (ss + 0.0)).epsilon(1e-12));
    CHECK_THROWS_AS(envelope_weights({Capsule{Vec3::Zero(), Vec3::UnitX(), 5.0, 5.0}}, pts), ValidationError);
    CHECK(distance_to_segment(Vec3(0, 3, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(std::sqrt(10.0)));
}

TEST_CASE("solve: bind frame reproduces bind poses and mesh") {
    const auto fx = tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config);
    const auto poses = solve_spline_ik(rig, fx.bind);
    REQUIRE(poses.size() == rig.chain.joint_count());
    for (std::size_t j = 0; j < poses.size(); ++j) {
        CHECK((poses[j].rotation - rig.chain.bind_poses[j].rotation).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((poses[j].translation - rig.chain.bind_poses[j].translation).norm() <= 1e-9);
    }
    const Points skinned = skin(rig, poses);
    for (std::size_t v = 0; v < skinned.size(); ++v) CHECK((skinned[v] - fx.tongue.vertices[v]).norm() <= 1e-9);
    CoilFrame missing = fx.bind;
    missing.erase("T2");
    CHECK_THROWS_AS(solve_spline_ik(rig, missing), ValidationError);
}

TEST_CASE("solve: translating every coil translates the joints") {
    auto fx = tongue_fixture();
    fx.config.anchor_coil = "ref";
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config);
    const Vec3 d(3.0, -2.0, 7.5);
    RigidTransform shift;
    shift.translation = d;
    const auto base = solve_spline_ik(rig, fx.bind);
    const auto moved = solve_spline_ik(rig, testing::transformed(fx.bind, shift));
    for (std::size_t j = 0; j < base.size(); ++j) {
        CHECK((moved[j].translation - base[j].translation - d).norm() < 1e-9);
        CHECK((moved[j].rotation - base[j].rotation).cwiseAbs().maxCoeff() < 1e-9);
    }
    const Points sk = skin(rig, moved);
    for (std::size_t v = 0; v < sk.size(); ++v) {
        const bool skinned = rig.weights.w.row(static_cast<Eigen::Index>(v)).sum() > 0.0;
        CHECK((sk[v] - fx.tongue.vertices[v] - (skinned ? d : Vec3::Zero())).norm() < 1e-9);
    }
}

TEST_CASE("solve: joints stay on the deformed spline") {
    const auto fx = tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config);
    std::mt19937 rng(40);
    for (int trial = 0; trial < 6; ++trial) {
        CoilFrame frame = fx.bind;
        if (trial == 0) frame["T2"] += Vec3(0, 5, 0);
        else
            for (const auto& c : {"T1", "T2", "T3"}) frame[c] += testing::random_point(rng, -8, 8);
        // Current control polygon rebuilt from the hooks, independent of deform_spline.
        Points ctrl = rig.spline.control_points();
        for (const auto& h : rig.hooks) ctrl[h.control_index] = frame.at(h.coil) + h.bind_offset;
        const CubicBSpline current(ctrl);
        const auto poses = solve_spline_ik(rig, frame);
        for (const auto& p : poses) {
            CHECK(distance_to_curve(current, p.translation) < 1e-6);
            CHECK(std::abs(p.rotation.determinant() - 1.0) < 1e-9);
            CHECK((p.rotation.transpose() * p.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        }
        // Stations are rescaled with the curve length: first joint at the root.
        CHECK((poses.front().translation - ctrl.front()).norm() < 1e-9);
        for (std::size_t j = 0; j < poses.size(); ++j) {
            const double s = rig.chain.stations[j] * current.arc_length() / rig.chain.stations.back();
            CHECK((poses[j].translation - current.point_at_arclength(s)).norm() < 1e-6);
            CHECK((poses[j].rotation.col(2) - current.tangent(current.param_at_arclength(s))).norm() < 1e-6);
        }
    }
}

TEST_CASE("skin: linear blend examples") {
    const Points verts = {Vec3(1, 2, 3), Vec3(-4, 0, 8), Vec3(0, 5, -1)};
    Rig one;
    one.tongue.vertices = verts;
    one.chain.bind_poses = {testing::rotation_about(Vec3(1, 1, 0), 25.0, Vec3(3, 0, 0))};
    one.weights.w = Eigen::MatrixXd::Ones(3, 1);
    const Vec3 d(2, -1, 4);
    JointPose moved = one.chain.bind_poses[0];
    moved.translation += d;
    const Points r = skin(one, {moved});
    for (std::size_t v = 0; v < 3; ++v) CHECK((r[v] - verts[v] - d).norm() < 1e-12);
    const Points same = skin(one, one.chain.bind_poses);
    for (std::size_t v = 0; v < 3; ++v) CHECK((same[v] - verts[v]).norm() < 1e-12);

    const Rig two = two_joint_rig(verts, 0.5);
    std::vector<JointPose> poses = two.chain.bind_poses;
    poses[1].translation += d;
    const Points h = skin(two, poses);
    for (std::size_t v = 0; v < 3; ++v) CHECK((h[v] - verts[v] - d / 2).norm() < 1e-12);

    Rig frozen = two_joint_rig(verts, 0.5);
    frozen.weights.w.row(1).setZero();
    CHECK(skin(frozen, poses)[1] == verts[1]);
    CHECK_THROWS_AS(skin(two, {poses[0]}), ValidationError);
}

TEST_CASE("jaw hinge") {
    const JawHinge hinge{Vec3(0, -10, -40), Vec3::UnitX(), "jaw", Vec3(0, -14, 32)};
    const RigidTransform id = jaw_transform(hinge, hinge.coil_bind_position);
    CHECK((id.rotation - Mat3::Identity()).norm() < 1e-15);
    CHECK(id.translation.norm() < 1e-12);

    const RigidTransform r10 = testing::rotation_about(Vec3::UnitX(), 10.0);
    const Vec3 rotated = hinge.axis_point + r10.rotation * (hinge.coil_bind_position - hinge.axis_point);
    const RigidTransform t = jaw_transform(hinge, rotated);
    CHECK(std::abs(t.rotation_angle() - 10.0 * std::numbers::pi / 180.0) < 1e-9);
    CHECK((t.apply(hinge.coil_bind_position) - rotated).norm() < 1e-9);
    const RigidTransform neg = jaw_transform(hinge, hinge.axis_point + r10.rotation.transpose() * (hinge.coil_bind_position - hinge.axis_point));
    CHECK((neg.rotation - r10.rotation.transpose()).cwiseAbs().maxCoeff() < 1e-9);

    const RigidTransform slide = jaw_transform(hinge, hinge.coil_bind_position + Vec3(7, 0, 0));
    CHECK((slide.rotation - Mat3::Identity()).norm() < 1e-12);

    CHECK_THROWS_AS(jaw_transform(hinge, Vec3(5, -10, -40)), NumericError);
    Rig no_hinge;
    CHECK_THROWS_AS(jaw_transform(no_hinge, Vec3::Zero()), ValidationError);

    std::mt19937 rng(9);
    const TriMesh mandible = testing::tongue_fixture().mandible;
    for (int i = 0; i < 20; ++i) {
        const RigidTransform j = jaw_transform(hinge, testing::random_point(rng, -30, 30) + Vec3(0, -20, 0));
        for (const auto& v : mandible.vertices) {
            auto axis_dist = [&](const Vec3& p) {
                const Vec3 q = p - hinge.axis_point;
                return (q - q.dot(hinge.axis_direction) * hinge.axis_direction).norm();
            };
            CHECK(std::abs(axis_dist(j.apply(v)) - axis_dist(v)) < 1e-9);
            CHECK(std::abs((j.apply(v) - v).dot(hinge.axis_direction)) < 1e-9);
        }
    }
}

TEST_CASE("rig: rigid equivariance of the deformation") {
    const auto fx = tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    std::mt19937 rng(50);
    for (int trial = 0; trial < 5; ++trial) {
        const RigidTransform t = testing::random_rigid(rng, 40.0);
        TriMesh tongue2 = fx.tongue;
        tongue2.vertices = t.apply(fx.tongue.vertices);
        RigConfig cfg2 = fx.config;
        cfg2.root_anchor = t.apply(cfg2.root_anchor);
        cfg2.tip_anchor = t.apply(cfg2.tip_anchor);
        cfg2.hinge->point = t.apply(cfg2.hinge->point);
        cfg2.hinge->direction = t.apply_vector(cfg2.hinge->direction);
        const Rig rig2 = build_rig(tongue2, testing::transformed(fx.bind, t), cfg2);
        check_weight_rows(rig2.weights);

        CoilFrame frame = fx.bind;
        for (const auto& c : {"T1", "T2", "T3", "jaw"}) frame[c] += testing::random_point(rng, -6, 6);
        const Points a = skin(rig, solve_spline_ik(rig, frame));
        const Points b = skin(rig2, solve_spline_ik(rig2, testing::transformed(frame, t)));
        for (std::size_t v = 0; v < a.size(); ++v) CHECK((b[v] - t.apply(a[v])).norm() < 1e-6);
        const RigidTransform ja = jaw_transform(rig, frame.at("jaw"));
        const RigidTransform jb = jaw_transform(rig2, t.apply(frame.at("jaw")));
        for (const auto& v : fx.mandible.vertices) CHECK((jb.apply(t.apply(v)) - t.apply(ja.apply(v))).norm() < 1e-6);
    }
}

TEST_CASE("rig document round trip") {
    auto fx = tongue_fixture();
    fx.config.anchor_coil = "ref";
    fx.config.smoothstep = true;
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible, testing::exploded_cube());
    const std::string text = write_rig(rig);
    const Rig back = parse_rig(text);
    CHECK(write_rig(back) == text);
    CHECK(back.weights.w == rig.weights.w);
    CHECK(back.tongue == rig.tongue);
    CHECK(back.mandible == rig.mandible);
    CHECK(back.maxilla == rig.maxilla);
    CoilFrame frame = fx.bind;
    frame["T1"] += Vec3(1, 2, 3);
    CHECK(skin(back, solve_spline_ik(back, frame)) == skin(rig, solve_spline_ik(rig, frame)));
    CHECK_THROWS_AS(parse_rig("{\"schema\": 1}"), ParseError);
    CHECK_THROWS_AS(parse_rig("not json"), ParseError);
}
