#pragma once

#include "ema/mesh.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ema {

// Raw polygon soup as read from a file, before triangulation.
struct PolyMesh {
    Points vertices;
    std::vector<std::vector<int>> faces;  // 0-based
};

// Parses `v` and `f` records; `f` accepts v, v/vt, v//vn, v/vt/vn and
// negative (relative) indices. Other record types are ignored.
PolyMesh parse_obj(std::string_view text);

// Quads kept when every face is a quad; otherwise polygons are fanned.
std::variant<TriMesh, QuadMesh> load_obj(std::string_view text);
TriMesh load_obj_tri(std::string_view text);
QuadMesh load_obj_quad(std::string_view text);

std::string save_obj(const TriMesh& m);
std::string save_obj(const QuadMesh& m);

// ASCII PLY with float x, y, z vertex properties (extra properties are
// skipped) and an optional face list element.
PolyMesh parse_ply(std::string_view text);
TriMesh load_ply_tri(std::string_view text);
QuadMesh load_ply_quad(std::string_view text);
Points load_ply_points(std::string_view text);

std::string save_ply(const TriMesh& m);
std::string save_ply(const QuadMesh& m);
std::string save_ply_points(const Points& pts);

// Fan triangulation; throws ValidationError for faces with < 3 vertices.
TriMesh fan_triangulate(const PolyMesh& m);

}  // namespace ema
