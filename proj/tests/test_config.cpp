#include "doctest.h"
#include "test_support.hpp"

#include "ema/config.hpp"
#include "ema/errors.hpp"

#include <nlohmann/json.hpp>

using namespace ema;

namespace {

const char* kConfig = R"({
  "schema": 1,
  "inputs": {"ema": "rec.csv", "tongue": "/abs/tongue.obj"},
  "coil_layout": ["T1", "T2", "T3", "jaw", "ref"],
  "plane": "x=0",
  "up": [0, 1, 0],
  "rig": {
    "hook_coils": ["T3", "T2", "T1"],
    "root_anchor": [0, 2, -36],
    "tip_anchor": [0, 2, 36],
    "joint_count": 6,
    "anchor_coil": "ref",
    "hinge": {"point": [0, -10, -40], "direction": [1, 0, 0], "coil": "jaw"}
  },
  "export": {"format": "vertex-csv", "tracked_vertices": [1, 2]},
  "subsample": {"palate": 3},
  "bind_frame": 4
})";

std::string with(const std::string& key_path, const nlohmann::json& value) {
    auto j = nlohmann::json::parse(kConfig);
    j[nlohmann::json::json_pointer(key_path)] = value;
    return j.dump();
}

std::string without(const std::string& key_path) {
    auto j = nlohmann::json::parse(kConfig);
    const auto ptr = nlohmann::json::json_pointer(key_path);
    j[ptr.parent_pointer()].erase(ptr.back());
    return j.dump();
}

}  // namespace

TEST_CASE("pipeline config: full document") {
    const auto c = parse_pipeline_config(kConfig, "/base");
    CHECK(*c.ema == std::filesystem::path("/base/rec.csv"));
    CHECK(*c.tongue == std::filesystem::path("/abs/tongue.obj"));
    CHECK_FALSE(c.maxilla.has_value());
    CHECK(c.coil_layout.size() == 5);
    CHECK(c.rig.joint_count == 6);
    CHECK(c.rig.r_in == 5.0);
    CHECK(c.rig.r_out == 15.0);
    CHECK(c.rig.depth == 2.0);
    CHECK_FALSE(c.rig.smoothstep);
    CHECK(*c.rig.anchor_coil == "ref");
    CHECK(c.rig.hinge->coil == "jaw");
    CHECK(c.export_options.format == "vertex-csv");
    CHECK(c.export_options.tracked_vertices == std::vector<std::size_t>{1, 2});
    CHECK(c.palate_subsample == 3);
    CHECK(c.bind_frame == 4);
    CHECK(c.frame_period == 0.005);
}

TEST_CASE("pipeline config: rejects unknown keys, bad schema, bad values") {
    CHECK_THROWS_WITH_AS(parse_pipeline_config(with("/rig/jionts", 3)), doctest::Contains("jionts"), ParseError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(with("/colour", 3)), doctest::Contains("colour"), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/schema", 2)), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(without("/schema")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(without("/rig")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(without("/rig/root_anchor")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(without("/rig/hinge/point")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/rig/joint_count", "eight")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/rig/tip_anchor", nlohmann::json::array({1, 2}))), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/export/format", "fbx")), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/inputs/ema", 5)), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config("{ not json"), ParseError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(with("/rig/hook_coils/0", "T4")), doctest::Contains("T4"), ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(with("/rig/hinge/coil", "chin")), ValidationError);
}

TEST_CASE("rig config JSON round trip") {
    const auto c = parse_pipeline_config(kConfig);
    const RigConfig back = rig_config_from_json(rig_config_to_json(c.rig));
    CHECK(rig_config_to_json(back) == rig_config_to_json(c.rig));
    CHECK(back.hook_coils == c.rig.hook_coils);
    CHECK(back.hinge->direction == c.rig.hinge->direction);
}

TEST_CASE("synth spec") {
    const auto doc = parse_synth_spec(R"({"schema": 1, "frame_rate": 200, "duration": 2.5,
        "coils": [{"name": "T1", "base": [0, 10, 24], "amplitude": [0, 8, 4], "frequency": [0, 2, 1], "phase": [0, 0, 1]},
                  {"name": "ref", "base": [0, 40, 0]}],
        "tongue": {"rings": 12}})");
    CHECK(doc.trajectories.coils.size() == 2);
    CHECK(doc.trajectories.coils[1].amplitude == Vec3::Zero());
    CHECK(synth_trajectories(doc.trajectories).frame_count() == 500);
    REQUIRE(doc.tongue.has_value());
    CHECK(doc.tongue->rings == 12);
    CHECK(doc.tongue->segments == 44);
    CHECK_THROWS_AS(parse_synth_spec(R"({"schema": 1, "frame_rate": 200, "duration": 1, "coils": [{"name": "a"}]})"), ParseError);
    CHECK_THROWS_AS(parse_synth_spec(R"({"schema": 1, "frame_rate": 200, "duration": 1, "coils": [], "extra": 1})"), ParseError);
    CHECK_THROWS_AS(parse_synth_spec(R"({"frame_rate": 200, "duration": 1, "coils": []})"), ParseError);
}
