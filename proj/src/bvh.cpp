#include "ema/bvh.hpp"

#include "ema/errors.hpp"
#include "ema/format.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace ema {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

bool is_position_label(std::string_view s) { return s == "Xposition" || s == "Yposition" || s == "Zposition"; }
bool is_rotation_label(std::string_view s) { return s == "Xrotation" || s == "Yrotation" || s == "Zrotation"; }

// Maps the three rotation channel values of a root to an orientation normal.
Vec3 rotation_channels_to_normal(const std::array<std::string, 6>& labels, const double* values, RotationMode mode) {
    if (mode == RotationMode::normals) return Vec3(values[0], values[1], values[2]);
    EulerAngles e;
    for (int k = 0; k < 3; ++k) {
        const auto& l = labels[3 + k];
        if (l == "Xrotation") e.x = values[k];
        else if (l == "Yrotation") e.y = values[k];
        else e.z = values[k];
    }
    return euler_to_normal(e);
}

struct Token {
    std::string_view text;
    std::size_t line;
};

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    bool done() const { return pos_ >= tokens_.size(); }
    const Token& peek() const {
        if (done()) throw ParseError("unexpected end of input", last_line());
        return tokens_[pos_];
    }
    const Token& next() {
        const Token& t = peek();
        ++pos_;
        return t;
    }
    void expect(std::string_view word) {
        const auto& t = next();
        if (t.text != word) throw ParseError("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'", t.line);
    }
    double number() {
        const auto& t = next();
        auto v = parse_double(t.text);
        if (!v) throw ParseError("expected a number, found '" + std::string(t.text) + "'", t.line);
        return *v;
    }
    std::size_t last_line() const { return tokens_.empty() ? 0 : tokens_.back().line; }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(RotationMode mode) { return mode == RotationMode::normals ? "normals" : "euler"; }

RotationMode rotation_mode_from_string(std::string_view s) {
    if (s == "normals") return RotationMode::normals;
    if (s == "euler") return RotationMode::euler;
    throw ValidationError("unknown rotation mode '" + std::string(s) + "'");
}

void validate(const BvhDocument& doc) {
    std::set<std::string> names;
    for (const auto& r : doc.roots) {
        if (r.name.empty() || r.name.find_first_of(" \t\r\n{}") != std::string::npos)
            throw ValidationError("invalid root name '" + r.name + "'");
        if (!names.insert(r.name).second) throw ValidationError("duplicate root name '" + r.name + "'");
        for (int k = 0; k < 3; ++k) {
            if (!is_position_label(r.channels[k]) || !is_rotation_label(r.channels[3 + k]))
                throw ValidationError("root '" + r.name + "' must list 3 position then 3 rotation channels");
        }
        if (std::abs(r.end_site.norm() - 1.0) > 1e-9)
            throw ValidationError("End Site offset of '" + r.name + "' is not a unit vector");
    }
    if (!(doc.frame_time > 0.0)) throw ValidationError("frame time must be positive");
    if (doc.motion.size() != doc.frame_count) throw ValidationError("motion row count differs from frame count");
    for (const auto& row : doc.motion)
        if (row.size() != doc.column_count()) throw ValidationError("motion row has wrong number of columns");
}

EulerAngles normal_to_euler(const Vec3& n) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw ValidationError("normal_to_euler needs a unit vector");
    EulerAngles e;
    e.x = -std::asin(std::clamp(n.y(), -1.0, 1.0)) * kRadToDeg;
    // Adding +0.0 clears negative zeros, which would turn atan2 into +-180.
    e.y = std::atan2(n.x() + 0.0, n.z() + 0.0) * kRadToDeg;
    e.z = 0.0;
    return e;
}

Vec3 euler_to_normal(const EulerAngles& e) {
    const Mat3 r = (Eigen::AngleAxisd(e.y * kDegToRad, Vec3::UnitY()) *
                    Eigen::AngleAxisd(e.x * kDegToRad, Vec3::UnitX()) *
                    Eigen::AngleAxisd(e.z * kDegToRad, Vec3::UnitZ()))
                       .toRotationMatrix();
    return r * Vec3::UnitZ();
}

BvhDocument to_bvh(const CoilTrajectorySet& set, RotationMode mode) {
    if (set.frame_count() == 0 || set.coil_count() == 0) throw ValidationError("empty trajectory set");
    BvhDocument doc;
    doc.rotation_mode = mode;
    doc.frame_count = set.frame_count();
    for (std::size_t c = 0; c < set.coil_count(); ++c) {
        BvhRoot root;
        root.name = set.coils()[c];
        root.offset = set.sample(0, c).position;
        doc.roots.push_back(std::move(root));
    }

    const auto& ts = set.timestamps();
    if (ts.size() >= 2) {
        std::vector<double> deltas(ts.size() - 1);
        for (std::size_t i = 1; i < ts.size(); ++i) deltas[i - 1] = ts[i] - ts[i - 1];
        std::sort(deltas.begin(), deltas.end());
        const auto m = deltas.size();
        doc.frame_time = m % 2 ? deltas[m / 2] : 0.5 * (deltas[m / 2 - 1] + deltas[m / 2]);
    }

    doc.motion.reserve(set.frame_count());
    for (std::size_t f = 0; f < set.frame_count(); ++f) {
        std::vector<double> row;
        row.reserve(doc.column_count());
        for (const auto& s : set.frame(f)) {
            row.insert(row.end(), {s.position.x(), s.position.y(), s.position.z()});
            if (mode == RotationMode::normals) {
                row.insert(row.end(), {s.normal.x(), s.normal.y(), s.normal.z()});
            } else {
                // Channel order is Zrotation Xrotation Yrotation.
                const auto e = normal_to_euler(s.normal);
                row.insert(row.end(), {e.z, e.x, e.y});
            }
        }
        doc.motion.push_back(std::move(row));
    }
    return doc;
}

CoilTrajectorySet from_bvh(const BvhDocument& doc) {
    validate(doc);
    std::vector<std::string> coils;
    for (const auto& r : doc.roots) coils.push_back(r.name);
    std::vector<double> times(doc.frame_count);
    std::vector<std::vector<CoilSample>> frames(doc.frame_count);
    for (std::size_t f = 0; f < doc.frame_count; ++f) {
        times[f] = static_cast<double>(f) * doc.frame_time;
        const auto& row = doc.motion[f];
        for (std::size_t r = 0; r < doc.roots.size(); ++r) {
            const auto& labels = doc.roots[r].channels;
            const double* v = row.data() + 6 * r;
            Vec3 p;
            for (int k = 0; k < 3; ++k) p[static_cast<int>(labels[k][0] - 'X')] = v[k];
            auto n = normalize_orientation(rotation_channels_to_normal(labels, v + 3, doc.rotation_mode));
            if (!n) throw ValidationError("frame " + std::to_string(f) + " of '" + doc.roots[r].name +
                                          "' has an orientation normal outside the accepted length band");
            frames[f].push_back({p, *n});
        }
    }
    return CoilTrajectorySet::make(std::move(coils), std::move(times), std::move(frames));
}

std::string write_bvh(const BvhDocument& doc) {
    validate(doc);
    auto vec = [](const Vec3& v) { return fixed6(v.x()) + " " + fixed6(v.y()) + " " + fixed6(v.z()); };
    std::string out = "HIERARCHY\n";
    out += "# ROTATIONS " + std::string(to_string(doc.rotation_mode)) + "\n";
    for (const auto& r : doc.roots) {
        out += "ROOT " + r.name + "\n{\n";
        out += "\tOFFSET " + vec(r.offset) + "\n";
        out += "\tCHANNELS 6";
        for (const auto& c : r.channels) out += " " + c;
        out += "\n\tEnd Site\n\t{\n";
        out += "\t\tOFFSET " + vec(r.end_site) + "\n";
        out += "\t}\n}\n";
    }
    out += "MOTION\n";
    out += "Frames: " + std::to_string(doc.frame_count) + "\n";
    out += "Frame Time: " + fixed6(doc.frame_time) + "\n";
    for (const auto& row : doc.motion) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ' ';
            out += fixed6(row[i]);
        }
        out += '\n';
    }
    return out;
}

BvhDocument parse_bvh(std::string_view text) {
    const auto lines = split_lines(text);
    BvhDocument doc;
    doc.rotation_mode = RotationMode::euler;  // plain BVH unless flagged

    // Hierarchy tokens up to MOTION; comment lines may carry the rotation flag.
    std::vector<Token> tokens;
    std::size_t i = 0;
    bool saw_motion = false;
    for (; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto tok = split_ws(line.substr(1));
            if (tok.size() == 2 && tok[0] == "ROTATIONS") {
                try {
                    doc.rotation_mode = rotation_mode_from_string(tok[1]);
                } catch (const ValidationError& e) {
                    throw ParseError(e.what(), i + 1);
                }
            }
            continue;
        }
        if (line == "MOTION") {
            saw_motion = true;
            ++i;
            break;
        }
        for (auto t : split_ws(line)) tokens.push_back({t, i + 1});
    }
    if (!saw_motion) throw ParseError("missing MOTION section");

    TokenStream ts(std::move(tokens));
    ts.expect("HIERARCHY");
    while (!ts.done()) {
        const auto& kw = ts.next();
        if (kw.text == "JOINT") throw ParseError("nested JOINT hierarchies are not supported", kw.line);
        if (kw.text != "ROOT") throw ParseError("unknown keyword '" + std::string(kw.text) + "'", kw.line);
        BvhRoot root;
        root.name = std::string(ts.next().text);
        ts.expect("{");
        bool has_offset = false, has_channels = false, has_end = false;
        for (;;) {
            const auto& t = ts.next();
            if (t.text == "}") break;
            if (t.text == "OFFSET") {
                for (int k = 0; k < 3; ++k) root.offset[k] = ts.number();
                has_offset = true;
            } else if (t.text == "CHANNELS") {
                const auto& count_tok = ts.next();
                auto n = parse_int(count_tok.text);
                if (!n) throw ParseError("bad channel count", count_tok.line);
                if (*n != 6)
                    throw ParseError("unsupported root shape: CHANNELS " + std::to_string(*n) + " (expected 6)",
                                     count_tok.line);
                for (int k = 0; k < 6; ++k) {
                    const auto& label = ts.next();
                    const bool ok = k < 3 ? is_position_label(label.text) : is_rotation_label(label.text);
                    if (!ok) throw ParseError("unsupported channel layout at '" + std::string(label.text) + "'", label.line);
                    root.channels[static_cast<std::size_t>(k)] = std::string(label.text);
                }
                has_channels = true;
            } else if (t.text == "End") {
                ts.expect("Site");
                ts.expect("{");
                ts.expect("OFFSET");
                Vec3 e;
                for (int k = 0; k < 3; ++k) e[k] = ts.number();
                ts.expect("}");
                const double len = e.norm();
                if (std::abs(len - 1.0) > 1e-5) throw ParseError("End Site OFFSET is not a unit vector", t.line);
                root.end_site = e / len;
                has_end = true;
            } else if (t.text == "JOINT") {
                throw ParseError("nested JOINT hierarchies are not supported", t.line);
            } else {
                throw ParseError("unknown keyword '" + std::string(t.text) + "'", t.line);
            }
        }
        if (!has_offset || !has_channels || !has_end)
            throw ParseError("ROOT '" + root.name + "' needs OFFSET, CHANNELS and End Site", kw.line);
        for (const auto& r : doc.roots)
            if (r.name == root.name) throw ParseError("duplicate ROOT '" + root.name + "'", kw.line);
        doc.roots.push_back(std::move(root));
    }
    if (doc.roots.empty()) throw ParseError("no ROOT in HIERARCHY");

    auto next_content = [&]() -> std::optional<std::size_t> {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i >= lines.size()) return std::nullopt;
        return i++;
    };
    auto frames_line = next_content();
    if (!frames_line) throw ParseError("missing 'Frames:' line");
    {
        auto tok = split_ws(lines[*frames_line]);
        auto n = tok.size() == 2 && tok[0] == "Frames:" ? parse_int(tok[1]) : std::nullopt;
        if (!n || *n < 0) throw ParseError("expected 'Frames: <count>'", *frames_line + 1);
        doc.frame_count = static_cast<std::size_t>(*n);
    }
    auto time_line = next_content();
    if (!time_line) throw ParseError("missing 'Frame Time:' line");
    {
        auto tok = split_ws(lines[*time_line]);
        auto v = tok.size() == 3 && tok[0] == "Frame" && tok[1] == "Time:" ? parse_double(tok[2]) : std::nullopt;
        if (!v || !(*v > 0.0)) throw ParseError("expected 'Frame Time: <seconds>'", *time_line + 1);
        doc.frame_time = *v;
    }
    const std::size_t cols = doc.column_count();
    while (auto li = next_content()) {
        auto tok = split_ws(lines[*li]);
        if (doc.motion.size() == doc.frame_count)
            throw ParseError("motion row count exceeds 'Frames: " + std::to_string(doc.frame_count) + "'", *li + 1);
        if (tok.size() != cols)
            throw ParseError("motion row has " + std::to_string(tok.size()) + " values, expected " + std::to_string(cols),
                             *li + 1);
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            auto v = parse_double(tok[c]);
            if (!v) throw ParseError("non-numeric motion value '" + std::string(tok[c]) + "'", *li + 1);
            row[c] = *v;
        }
        doc.motion.push_back(std::move(row));
    }
    if (doc.motion.size() != doc.frame_count)
        throw ParseError("motion row count " + std::to_string(doc.motion.size()) + " differs from 'Frames: " +
                         std::to_string(doc.frame_count) + "'");
    return doc;
}

}  // namespace ema
