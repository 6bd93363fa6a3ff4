#include "ema/mesh_io.hpp"

#include "ema/errors.hpp"
#include "ema/format.hpp"

#include <algorithm>

namespace ema {

namespace {

std::string vec_text(const Vec3& v) { return fixed6(v.x()) + " " + fixed6(v.y()) + " " + fixed6(v.z()); }

template <std::size_t N>
std::string obj_text(const Points& vertices, const std::vector<std::array<int, N>>& faces) {
    std::string out;
    for (const auto& v : vertices) out += "v " + vec_text(v) + "\n";
    for (const auto& f : faces) {
        out += "f";
        for (int i : f) out += " " + std::to_string(i + 1);
        out += "\n";
    }
    return out;
}

template <std::size_t N>
std::string ply_text(const Points& vertices, const std::vector<std::array<int, N>>& faces) {
    std::string out = "ply\nformat ascii 1.0\n";
    out += "element vertex " + std::to_string(vertices.size()) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (!faces.empty()) {
        out += "element face " + std::to_string(faces.size()) + "\n";
        out += "property list uchar int vertex_indices\n";
    }
    out += "end_header\n";
    for (const auto& v : vertices) out += vec_text(v) + "\n";
    for (const auto& f : faces) {
        out += std::to_string(N);
        for (int i : f) out += " " + std::to_string(i);
        out += "\n";
    }
    return out;
}

QuadMesh to_quads(const PolyMesh& m) {
    QuadMesh out;
    out.vertices = m.vertices;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        if (m.faces[f].size() != 4) throw ValidationError("face " + std::to_string(f) + " is not a quad");
        out.faces.push_back({m.faces[f][0], m.faces[f][1], m.faces[f][2], m.faces[f][3]});
    }
    validate(out);
    return out;
}

}  // namespace

PolyMesh parse_obj(std::string_view text) {
    PolyMesh m;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto tok = split_ws(lines[i]);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError("vertex record needs 3 coordinates", i + 1);
            Vec3 p;
            for (int k = 0; k < 3; ++k) {
                auto v = parse_double(tok[static_cast<std::size_t>(k + 1)]);
                if (!v) throw ParseError("non-numeric vertex coordinate", i + 1);
                p[k] = *v;
            }
            m.vertices.push_back(p);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError("face record needs at least 3 vertices", i + 1);
            std::vector<int> face;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                auto idx_text = tok[k].substr(0, tok[k].find('/'));
                auto idx = parse_int(idx_text);
                if (!idx || *idx == 0) throw ParseError("bad face index '" + std::string(tok[k]) + "'", i + 1);
                const long long n = static_cast<long long>(m.vertices.size());
                const long long zero_based = *idx > 0 ? *idx - 1 : n + *idx;
                if (zero_based < 0 || zero_based >= n)
                    throw ParseError("face index " + std::to_string(*idx) + " out of range (" + std::to_string(n) +
                                         " vertices)",
                                     i + 1);
                face.push_back(static_cast<int>(zero_based));
            }
            for (std::size_t a = 0; a < face.size(); ++a)
                for (std::size_t b = 0; b < a; ++b)
                    if (face[a] == face[b]) throw ParseError("face repeats a vertex", i + 1);
            m.faces.push_back(std::move(face));
        }
    }
    return m;
}

TriMesh fan_triangulate(const PolyMesh& m) {
    TriMesh out;
    out.vertices = m.vertices;
    for (const auto& f : m.faces) {
        if (f.size() < 3) throw ValidationError("face with fewer than 3 vertices");
        for (std::size_t k = 1; k + 1 < f.size(); ++k) out.faces.push_back({f[0], f[k], f[k + 1]});
    }
    validate(out);
    return out;
}

std::variant<TriMesh, QuadMesh> load_obj(std::string_view text) {
    auto poly = parse_obj(text);
    const bool all_quads = !poly.faces.empty() &&
                           std::all_of(poly.faces.begin(), poly.faces.end(), [](const auto& f) { return f.size() == 4; });
    if (all_quads) return to_quads(poly);
    return fan_triangulate(poly);
}

TriMesh load_obj_tri(std::string_view text) { return fan_triangulate(parse_obj(text)); }
QuadMesh load_obj_quad(std::string_view text) { return to_quads(parse_obj(text)); }

std::string save_obj(const TriMesh& m) { return obj_text(m.vertices, m.faces); }
std::string save_obj(const QuadMesh& m) { return obj_text(m.vertices, m.faces); }

PolyMesh parse_ply(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "ply") throw ParseError("missing 'ply' magic", 1);

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::string> props;  // "list" entries recorded as "list:<name>"
    };
    std::vector<Element> elements;
    std::size_t i = 1;
    bool ascii = false;
    for (; i < lines.size(); ++i) {
        auto tok = split_ws(lines[i]);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") {
            ++i;
            break;
        }
        if (tok[0] == "format") {
            if (tok.size() < 2 || tok[1] != "ascii") throw ParseError("only ascii PLY is supported", i + 1);
            ascii = true;
        } else if (tok[0] == "element") {
            auto n = tok.size() == 3 ? parse_int(tok[2]) : std::nullopt;
            if (!n || *n < 0) throw ParseError("malformed element record", i + 1);
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(*n), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("property before any element", i + 1);
            if (tok.size() == 5 && tok[1] == "list") elements.back().props.push_back("list:" + std::string(tok[4]));
            else if (tok.size() == 3) elements.back().props.emplace_back(tok[2]);
            else throw ParseError("malformed property record", i + 1);
        } else {
            throw ParseError("unknown header record '" + std::string(tok[0]) + "'", i + 1);
        }
    }
    if (!ascii) throw ParseError("missing 'format ascii 1.0'");

    PolyMesh m;
    auto next_row = [&]() -> std::pair<std::vector<std::string_view>, std::size_t> {
        while (i < lines.size()) {
            auto tok = split_ws(lines[i]);
            ++i;
            if (!tok.empty()) return {tok, i};
        }
        throw ParseError("unexpected end of PLY data");
    };
    for (const auto& el : elements) {
        if (el.name == "vertex") {
            int xyz[3] = {-1, -1, -1};
            for (std::size_t p = 0; p < el.props.size(); ++p) {
                if (el.props[p] == "x") xyz[0] = static_cast<int>(p);
                if (el.props[p] == "y") xyz[1] = static_cast<int>(p);
                if (el.props[p] == "z") xyz[2] = static_cast<int>(p);
                if (el.props[p].starts_with("list:")) throw ParseError("list property on vertex element");
            }
            if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) throw ParseError("vertex element lacks x, y, z");
            for (std::size_t r = 0; r < el.count; ++r) {
                auto [tok, line] = next_row();
                if (tok.size() != el.props.size()) throw ParseError("vertex row has wrong number of values", line);
                Vec3 p;
                for (int k = 0; k < 3; ++k) {
                    auto v = parse_double(tok[static_cast<std::size_t>(xyz[k])]);
                    if (!v) throw ParseError("non-numeric vertex value", line);
                    p[k] = *v;
                }
                m.vertices.push_back(p);
            }
        } else if (el.name == "face") {
            if (el.props.size() != 1 || !el.props[0].starts_with("list:"))
                throw ParseError("face element must hold a single index list");
            for (std::size_t r = 0; r < el.count; ++r) {
                auto [tok, line] = next_row();
                auto n = parse_int(tok[0]);
                if (!n || *n < 3 || tok.size() != static_cast<std::size_t>(*n) + 1)
                    throw ParseError("malformed face row", line);
                std::vector<int> face;
                for (std::size_t k = 1; k < tok.size(); ++k) {
                    auto idx = parse_int(tok[k]);
                    if (!idx || *idx < 0 || *idx >= static_cast<long long>(m.vertices.size()))
                        throw ParseError("face index out of range", line);
                    face.push_back(static_cast<int>(*idx));
                }
                m.faces.push_back(std::move(face));
            }
        } else {
            for (std::size_t r = 0; r < el.count; ++r) next_row();
        }
    }
    return m;
}

TriMesh load_ply_tri(std::string_view text) { return fan_triangulate(parse_ply(text)); }
QuadMesh load_ply_quad(std::string_view text) { return to_quads(parse_ply(text)); }
Points load_ply_points(std::string_view text) { return parse_ply(text).vertices; }

std::string save_ply(const TriMesh& m) { return ply_text(m.vertices, m.faces); }
std::string save_ply(const QuadMesh& m) { return ply_text(m.vertices, m.faces); }
std::string save_ply_points(const Points& pts) { return ply_text(pts, std::vector<Tri>{}); }

}  // namespace ema
