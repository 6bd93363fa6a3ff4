#include "ema/config.hpp"

#include "ema/errors.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace ema {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ParseError(std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == key;
        if (!ok) throw ParseError("unknown key '" + key + "' in " + std::string(where));
    }
}

void check_schema(const json& j) {
    if (!j.contains("schema")) throw ParseError("missing 'schema' field");
    if (!j["schema"].is_number_integer() || j["schema"].get<int>() != kSchemaVersion)
        throw ParseError("unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
}

Vec3 vec3(const json& j, std::string_view what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be an array of 3 numbers");
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
        if (!j[static_cast<std::size_t>(k)].is_number()) throw ParseError(std::string(what) + " must hold numbers");
        v[k] = j[static_cast<std::size_t>(k)].get<double>();
    }
    return v;
}

const json& field(const json& j, std::string_view key, std::string_view where) {
    auto it = j.find(std::string(key));
    if (it == j.end()) throw ParseError("missing key '" + std::string(key) + "' in " + std::string(where));
    return *it;
}

template <typename T>
T get(const json& j, std::string_view key, std::string_view where) {
    try {
        return j.at(std::string(key)).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string(where) + "." + std::string(key) + ": " + e.what());
    }
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

RigConfig rig_config_from_json(const json& j) {
    check_keys(j, {"hook_coils", "root_anchor", "tip_anchor", "joint_count", "r_in", "r_out", "smoothstep", "depth",
                   "depth_vector", "anchor_coil", "hinge"},
               "rig");
    RigConfig c;
    c.hook_coils = get<std::vector<std::string>>(j, "hook_coils", "rig");
    c.root_anchor = vec3(field(j, "root_anchor", "rig"), "rig.root_anchor");
    c.tip_anchor = vec3(field(j, "tip_anchor", "rig"), "rig.tip_anchor");
    if (j.contains("joint_count")) c.joint_count = get<int>(j, "joint_count", "rig");
    if (j.contains("r_in")) c.r_in = get<double>(j, "r_in", "rig");
    if (j.contains("r_out")) c.r_out = get<double>(j, "r_out", "rig");
    if (j.contains("smoothstep")) c.smoothstep = get<bool>(j, "smoothstep", "rig");
    if (j.contains("depth")) c.depth = get<double>(j, "depth", "rig");
    if (j.contains("depth_vector")) c.depth_vector = vec3(j["depth_vector"], "rig.depth_vector");
    if (j.contains("anchor_coil")) c.anchor_coil = get<std::string>(j, "anchor_coil", "rig");
    if (j.contains("hinge")) {
        const auto& h = j["hinge"];
        check_keys(h, {"point", "direction", "coil"}, "rig.hinge");
        HingeConfig hc;
        hc.point = vec3(field(h, "point", "rig.hinge"), "rig.hinge.point");
        hc.direction = vec3(field(h, "direction", "rig.hinge"), "rig.hinge.direction");
        if (h.contains("coil")) hc.coil = get<std::string>(h, "coil", "rig.hinge");
        c.hinge = hc;
    }
    return c;
}

json rig_config_to_json(const RigConfig& c) {
    auto arr = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
    json j;
    j["hook_coils"] = c.hook_coils;
    j["root_anchor"] = arr(c.root_anchor);
    j["tip_anchor"] = arr(c.tip_anchor);
    j["joint_count"] = c.joint_count;
    j["r_in"] = c.r_in;
    j["r_out"] = c.r_out;
    j["smoothstep"] = c.smoothstep;
    j["depth"] = c.depth;
    if (c.depth_vector) j["depth_vector"] = arr(*c.depth_vector);
    if (c.anchor_coil) j["anchor_coil"] = *c.anchor_coil;
    if (c.hinge) j["hinge"] = {{"point", arr(c.hinge->point)}, {"direction", arr(c.hinge->direction)}, {"coil", c.hinge->coil}};
    return j;
}

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
    const json j = parse_json(text);
    check_keys(j, {"schema", "inputs", "coil_layout", "plane", "up", "rig", "export", "subsample", "bind_frame",
                   "frame_period"},
               "config");
    check_schema(j);
    PipelineConfig c;
    auto path_of = [&](const json& v) {
        if (!v.is_string()) throw ParseError("input paths must be strings");
        std::filesystem::path p(v.get<std::string>());
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    if (j.contains("inputs")) {
        const auto& in = j["inputs"];
        check_keys(in, {"ema", "tongue", "maxilla", "mandible"}, "inputs");
        if (in.contains("ema")) c.ema = path_of(in["ema"]);
        if (in.contains("tongue")) c.tongue = path_of(in["tongue"]);
        if (in.contains("maxilla")) c.maxilla = path_of(in["maxilla"]);
        if (in.contains("mandible")) c.mandible = path_of(in["mandible"]);
    }
    if (j.contains("coil_layout")) c.coil_layout = get<std::vector<std::string>>(j, "coil_layout", "config");
    if (j.contains("plane")) c.plane = get<std::string>(j, "plane", "config");
    if (j.contains("up")) c.up = vec3(j["up"], "config.up");
    if (!j.contains("rig")) throw ParseError("missing 'rig' section");
    c.rig = rig_config_from_json(j["rig"]);
    if (j.contains("export")) {
        const auto& e = j["export"];
        check_keys(e, {"format", "tracked_vertices"}, "export");
        if (e.contains("format")) c.export_options.format = get<std::string>(e, "format", "export");
        if (e.contains("tracked_vertices"))
            c.export_options.tracked_vertices = get<std::vector<std::size_t>>(e, "tracked_vertices", "export");
        if (c.export_options.format != "obj-sequence" && c.export_options.format != "vertex-csv")
            throw ParseError("export.format must be 'obj-sequence' or 'vertex-csv'");
    }
    if (j.contains("subsample")) {
        const auto& s = j["subsample"];
        check_keys(s, {"palate"}, "subsample");
        if (s.contains("palate")) c.palate_subsample = get<std::size_t>(s, "palate", "subsample");
    }
    if (j.contains("bind_frame")) c.bind_frame = get<std::size_t>(j, "bind_frame", "config");
    if (j.contains("frame_period")) c.frame_period = get<double>(j, "frame_period", "config");

    if (!c.coil_layout.empty()) {
        std::set<std::string> layout(c.coil_layout.begin(), c.coil_layout.end());
        for (const auto& coil : c.rig.hook_coils)
            if (!layout.count(coil)) throw ValidationError("rig hook coil '" + coil + "' not in coil_layout");
        if (c.rig.anchor_coil && !layout.count(*c.rig.anchor_coil))
            throw ValidationError("anchor coil '" + *c.rig.anchor_coil + "' not in coil_layout");
        if (c.rig.hinge && !layout.count(c.rig.hinge->coil))
            throw ValidationError("hinge coil '" + c.rig.hinge->coil + "' not in coil_layout");
    }
    return c;
}

SynthDocument parse_synth_spec(std::string_view text) {
    const json j = parse_json(text);
    check_keys(j, {"schema", "frame_rate", "duration", "coils", "tongue"}, "synth spec");
    check_schema(j);
    SynthDocument doc;
    auto& t = doc.trajectories;
    t.frame_rate = get<double>(j, "frame_rate", "synth");
    t.duration = get<double>(j, "duration", "synth");
    if (!j.contains("coils") || !j["coils"].is_array()) throw ParseError("synth spec needs a 'coils' array");
    for (const auto& cj : j["coils"]) {
        check_keys(cj, {"name", "base", "amplitude", "frequency", "phase"}, "synth coil");
        SynthCoil c;
        c.name = get<std::string>(cj, "name", "synth coil");
        c.base = vec3(field(cj, "base", "synth coil"), "base");
        if (cj.contains("amplitude")) c.amplitude = vec3(cj["amplitude"], "amplitude");
        if (cj.contains("frequency")) c.frequency = vec3(cj["frequency"], "frequency");
        if (cj.contains("phase")) c.phase = vec3(cj["phase"], "phase");
        t.coils.push_back(c);
    }
    if (j.contains("tongue")) {
        const auto& tj = j["tongue"];
        check_keys(tj, {"semi_axes", "rings", "segments"}, "synth tongue");
        TongueSynthSpec ts;
        if (tj.contains("semi_axes")) ts.semi_axes = vec3(tj["semi_axes"], "tongue.semi_axes");
        if (tj.contains("rings")) ts.rings = get<int>(tj, "rings", "tongue");
        if (tj.contains("segments")) ts.segments = get<int>(tj, "segments", "tongue");
        doc.tongue = ts;
    }
    return doc;
}

}  // namespace ema
