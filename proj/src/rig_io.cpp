#include "ema/rig_io.hpp"

#include "ema/config.hpp"
#include "ema/errors.hpp"

#include <nlohmann/json.hpp>

namespace ema {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat(const Mat3& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r) out.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return out;
}

Mat3 mat(const json& j) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

json mesh(const TriMesh& m) {
    json v = json::array(), f = json::array();
    for (const auto& p : m.vertices) v.push_back(vec(p));
    for (const auto& t : m.faces) f.push_back(json::array({t[0], t[1], t[2]}));
    return {{"vertices", v}, {"faces", f}};
}

TriMesh mesh(const json& j) {
    TriMesh m;
    for (const auto& p : j.at("vertices")) m.vertices.push_back(vec(p));
    for (const auto& t : j.at("faces")) m.faces.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    validate(m);
    return m;
}

json pose(const JointPose& p) { return {{"rotation", mat(p.rotation)}, {"translation", vec(p.translation)}}; }
JointPose pose(const json& j) { return {mat(j.at("rotation")), vec(j.at("translation"))}; }

}  // namespace

std::string write_rig(const Rig& rig) {
    json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "rig";
    j["config"] = rig_config_to_json(rig.config);
    j["tongue"] = mesh(rig.tongue);
    j["mandible"] = mesh(rig.mandible);
    j["maxilla"] = mesh(rig.maxilla);
    json ctrl = json::array();
    for (const auto& p : rig.spline.control_points()) ctrl.push_back(vec(p));
    j["spline"] = {{"degree", CubicBSpline::kDegree}, {"control_points", ctrl}};
    json hooks = json::array();
    for (const auto& h : rig.hooks)
        hooks.push_back({{"coil", h.coil}, {"control_index", h.control_index}, {"bind_offset", vec(h.bind_offset)}});
    j["hooks"] = hooks;
    json poses = json::array();
    for (const auto& p : rig.chain.bind_poses) poses.push_back(pose(p));
    j["chain"] = {{"stations", rig.chain.stations}, {"root_frame", mat(rig.chain.root_frame)}, {"bind_poses", poses}};
    json env = json::array();
    for (const auto& e : rig.envelopes)
        env.push_back({{"head", vec(e.head)}, {"tail", vec(e.tail)}, {"r_in", e.r_in}, {"r_out", e.r_out}});
    j["envelopes"] = env;
    json rows = json::array();
    for (Eigen::Index r = 0; r < rig.weights.w.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < rig.weights.w.cols(); ++c) row.push_back(rig.weights.w(r, c));
        rows.push_back(row);
    }
    j["weights"] = {{"rows", rows}, {"unskinned", rig.weights.unskinned}};
    if (rig.jaw)
        j["jaw"] = {{"axis_point", vec(rig.jaw->axis_point)},
                    {"axis_direction", vec(rig.jaw->axis_direction)},
                    {"coil", rig.jaw->coil},
                    {"coil_bind_position", vec(rig.jaw->coil_bind_position)}};
    json frame = json::object();
    for (const auto& [name, p] : rig.bind_frame) frame[name] = vec(p);
    j["bind_frame"] = frame;
    return j.dump(1) + "\n";
}

Rig parse_rig(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.value("schema", 0) != kSchemaVersion || j.value("kind", "") != "rig")
            throw ParseError("not a rig document (schema/kind mismatch)");
        Rig rig;
        rig.config = rig_config_from_json(j.at("config"));
        rig.tongue = mesh(j.at("tongue"));
        rig.mandible = mesh(j.at("mandible"));
        rig.maxilla = mesh(j.at("maxilla"));
        Points ctrl;
        for (const auto& p : j.at("spline").at("control_points")) ctrl.push_back(vec(p));
        rig.spline = CubicBSpline(std::move(ctrl));
        for (const auto& h : j.at("hooks")) {
            Hook hook{h.at("coil").get<std::string>(), h.at("control_index").get<std::size_t>(), vec(h.at("bind_offset"))};
            if (hook.control_index >= rig.spline.control_points().size()) throw ParseError("hook index out of range");
            rig.hooks.push_back(hook);
        }
        const auto& chain = j.at("chain");
        rig.chain.stations = chain.at("stations").get<std::vector<double>>();
        rig.chain.root_frame = mat(chain.at("root_frame"));
        for (const auto& p : chain.at("bind_poses")) rig.chain.bind_poses.push_back(pose(p));
        if (rig.chain.stations.size() != rig.chain.bind_poses.size() + 1)
            throw ParseError("joint chain stations do not match joint count");
        for (const auto& e : j.at("envelopes"))
            rig.envelopes.push_back({vec(e.at("head")), vec(e.at("tail")), e.at("r_in").get<double>(), e.at("r_out").get<double>()});
        const auto& rows = j.at("weights").at("rows");
        const auto joints = static_cast<Eigen::Index>(rig.chain.joint_count());
        if (rows.size() != rig.tongue.vertices.size()) throw ParseError("weight rows do not match tongue vertices");
        rig.weights.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), joints);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != static_cast<std::size_t>(joints)) throw ParseError("weight row has wrong length");
            for (Eigen::Index c = 0; c < joints; ++c)
                rig.weights.w(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
        }
        rig.weights.unskinned = j.at("weights").at("unskinned").get<std::vector<std::size_t>>();
        if (j.contains("jaw")) {
            const auto& h = j["jaw"];
            rig.jaw = JawHinge{vec(h.at("axis_point")), vec(h.at("axis_direction")), h.at("coil").get<std::string>(),
                               vec(h.at("coil_bind_position"))};
        }
        for (const auto& [name, p] : j.at("bind_frame").items()) rig.bind_frame[name] = vec(p);
        return rig;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed rig document: ") + e.what());
    }
}

}  // namespace ema
