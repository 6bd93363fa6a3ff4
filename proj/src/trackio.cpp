#include "ema/trackio.hpp"

#include "ema/errors.hpp"
#include "ema/format.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace ema {

namespace {

constexpr std::array<std::string_view, 6> kComponents = {"x", "y", "z", "nx", "ny", "nz"};

std::optional<std::size_t> component_index(std::string_view suffix) {
    for (std::size_t i = 0; i < kComponents.size(); ++i)
        if (kComponents[i] == suffix) return i;
    return std::nullopt;
}

// Builds a sample from (x, y, z, nx, ny, nz); nullopt when the normal is
// outside the accepted band.
std::optional<CoilSample> make_sample(const double* v) {
    auto n = normalize_orientation(Vec3(v[3], v[4], v[5]));
    if (!n) return std::nullopt;
    return CoilSample{Vec3(v[0], v[1], v[2]), *n};
}

}  // namespace

CoilTrajectorySet CoilTrajectorySet::make(std::vector<std::string> coils, std::vector<double> timestamps,
                                          std::vector<std::vector<CoilSample>> frames) {
    std::set<std::string> seen;
    for (const auto& c : coils) {
        if (c.empty()) throw ValidationError("empty coil name");
        if (!seen.insert(c).second) throw ValidationError("duplicate coil name '" + c + "'");
    }
    if (frames.size() != timestamps.size())
        throw ValidationError("frame count does not match timestamp count");
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!std::isfinite(timestamps[f])) throw ValidationError("non-finite timestamp");
        if (f > 0 && !(timestamps[f] > timestamps[f - 1]))
            throw ValidationError("timestamps not strictly increasing at frame " + std::to_string(f));
        if (frames[f].size() != coils.size())
            throw ValidationError("frame " + std::to_string(f) + " does not hold one sample per coil");
        for (const auto& s : frames[f]) {
            if (!s.position.allFinite()) throw ValidationError("non-finite coil position");
            if (!s.normal.allFinite() || std::abs(s.normal.norm() - 1.0) > 1e-3)
                throw ValidationError("orientation normal is not unit length");
        }
    }
    CoilTrajectorySet out;
    out.coils_ = std::move(coils);
    out.timestamps_ = std::move(timestamps);
    out.frames_ = std::move(frames);
    return out;
}

std::optional<std::size_t> CoilTrajectorySet::coil_index(std::string_view name) const {
    for (std::size_t i = 0; i < coils_.size(); ++i)
        if (coils_[i] == name) return i;
    return std::nullopt;
}

const CoilSample& CoilTrajectorySet::sample(std::size_t f, std::string_view coil) const {
    auto c = coil_index(coil);
    if (!c) throw ValidationError("unknown coil '" + std::string(coil) + "'");
    return sample(f, *c);
}

CoilTrajectorySet CoilTrajectorySet::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > frame_count()) throw ValidationError("frame window out of range");
    CoilTrajectorySet out;
    out.coils_ = coils_;
    out.timestamps_.assign(timestamps_.begin() + begin, timestamps_.begin() + end);
    out.frames_.assign(frames_.begin() + begin, frames_.begin() + end);
    return out;
}

std::optional<Vec3> normalize_orientation(const Vec3& n) {
    const double len = n.norm();
    if (!std::isfinite(len) || len < 0.5 || len > 2.0) return std::nullopt;
    return n / len;
}

TrackParseResult parse_est_ascii(std::string_view text) {
    const auto lines = split_lines(text);
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i == lines.size()) throw ParseError("empty input");
    {
        auto tok = split_ws(lines[i]);
        if (tok.size() != 2 || tok[0] != "EST_File" || tok[1] != "Track")
            throw ParseError("expected 'EST_File Track' header", i + 1);
    }
    ++i;

    std::map<std::string, std::string, std::less<>> header;
    std::map<long long, std::pair<std::string, std::size_t>> channels;  // index -> (name, line)
    bool header_end = false;
    for (; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        auto tok = split_ws(line);
        if (tok[0] == "EST_Header_End") {
            header_end = true;
            ++i;
            break;
        }
        if (tok.size() < 2) throw ParseError("header key '" + std::string(tok[0]) + "' has no value", i + 1);
        if (tok[0].starts_with("Channel_")) {
            auto idx = parse_int(tok[0].substr(8));
            if (!idx || *idx < 0) throw ParseError("bad channel key '" + std::string(tok[0]) + "'", i + 1);
            channels[*idx] = {std::string(tok[1]), i + 1};
        } else {
            header[std::string(tok[0])] = std::string(tok[1]);
        }
    }
    if (!header_end) throw ParseError("missing header key 'EST_Header_End'");
    const std::size_t data_start = i;

    auto require = [&](std::string_view key) -> const std::string& {
        auto it = header.find(key);
        if (it == header.end()) throw ParseError("missing header key '" + std::string(key) + "'", data_start);
        return it->second;
    };
    if (require("DataType") != "ascii") throw ParseError("only 'DataType ascii' is supported", data_start);
    auto num_frames = parse_int(require("NumFrames"));
    auto num_channels = parse_int(require("NumChannels"));
    if (!num_frames || *num_frames < 0) throw ParseError("bad NumFrames value", data_start);
    if (!num_channels || *num_channels <= 0) throw ParseError("bad NumChannels value", data_start);
    const auto nch = static_cast<std::size_t>(*num_channels);

    // Group channels by coil, coils in order of first channel appearance.
    std::vector<std::string> coils;
    std::vector<std::array<long, 6>> slots;  // per coil: channel column for each component
    std::vector<std::array<int, 6>> counts;
    for (std::size_t c = 0; c < nch; ++c) {
        auto it = channels.find(static_cast<long long>(c));
        if (it == channels.end()) throw ParseError("missing header key 'Channel_" + std::to_string(c) + "'", data_start);
        const auto& [name, line] = it->second;
        auto us = name.rfind('_');
        auto comp = us == std::string::npos ? std::nullopt : component_index(std::string_view(name).substr(us + 1));
        if (!comp || us == 0)
            throw ParseError("channel '" + name + "' is not of the form <coil>_<x|y|z|nx|ny|nz>", line);
        std::string coil = name.substr(0, us);
        std::size_t k = 0;
        while (k < coils.size() && coils[k] != coil) ++k;
        if (k == coils.size()) {
            coils.push_back(coil);
            slots.push_back({-1, -1, -1, -1, -1, -1});
            counts.push_back({0, 0, 0, 0, 0, 0});
        }
        slots[k][*comp] = static_cast<long>(c);
        counts[k][*comp] += 1;
    }
    for (std::size_t k = 0; k < coils.size(); ++k) {
        int total = 0;
        bool complete = true;
        for (int n : counts[k]) {
            total += n;
            complete = complete && n == 1;
        }
        if (!complete)
            throw ParseError("coil '" + coils[k] + "' has " + std::to_string(total) +
                             " channels; expected exactly x,y,z,nx,ny,nz");
    }

    TrackParseResult result;
    std::vector<double> times;
    std::vector<std::vector<CoilSample>> frames;
    std::vector<double> row(nch);
    for (; i < lines.size(); ++i) {
        auto tok = split_ws(lines[i]);
        if (tok.empty()) continue;
        ++result.raw_rows;
        if (tok.size() != nch + 2)
            throw ParseError("expected " + std::to_string(nch + 2) + " values (time, flag, " + std::to_string(nch) +
                                 " channels), found " + std::to_string(tok.size()),
                             i + 1);
        auto t = parse_double(tok[0]);
        auto flag = parse_double(tok[1]);
        if (!t || !flag) throw ParseError("non-numeric value", i + 1);
        for (std::size_t c = 0; c < nch; ++c) {
            auto v = parse_double(tok[c + 2]);
            if (!v) throw ParseError("non-numeric value '" + std::string(tok[c + 2]) + "'", i + 1);
            row[c] = *v;
        }
        if (*flag != 1.0) {
            result.dropped.push_back({i + 1, "flag " + std::string(tok[1])});
            continue;
        }
        std::vector<CoilSample> frame;
        frame.reserve(coils.size());
        bool ok = true;
        for (std::size_t k = 0; k < coils.size() && ok; ++k) {
            double v[6];
            for (int c = 0; c < 6; ++c) v[c] = row[static_cast<std::size_t>(slots[k][c])];
            auto s = make_sample(v);
            if (!s) ok = false;
            else frame.push_back(*s);
        }
        if (!ok) {
            result.dropped.push_back({i + 1, "orientation normal length outside [0.5, 2]"});
            continue;
        }
        if (!times.empty() && !(*t > times.back())) throw ParseError("timestamps not strictly increasing", i + 1);
        times.push_back(*t);
        frames.push_back(std::move(frame));
    }
    if (result.raw_rows != static_cast<std::size_t>(*num_frames))
        throw ParseError("NumFrames is " + std::to_string(*num_frames) + " but " + std::to_string(result.raw_rows) +
                         " data rows are present");
    if (frames.empty()) throw ParseError("no frames");
    result.set = CoilTrajectorySet::make(std::move(coils), std::move(times), std::move(frames));
    return result;
}

TrackParseResult parse_coil_csv(std::string_view text, const std::vector<std::string>& layout,
                                const CsvOptions& options) {
    if (layout.empty()) throw ValidationError("empty coil layout");
    if (!(options.frame_period > 0.0)) throw ValidationError("frame period must be positive");
    const std::size_t nvals = 6 * layout.size();
    const auto lines = split_lines(text);

    TrackParseResult result;
    std::vector<double> times;
    std::vector<std::vector<CoilSample>> frames;
    std::optional<bool> has_time;
    bool first = true;
    std::vector<double> row;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto cells = split_char(lines[i], ',');
        if (first) {
            first = false;
            if (!parse_double(cells[0])) continue;  // header row
        }
        if (!has_time) {
            if (cells.size() == nvals + 1) has_time = true;
            else if (cells.size() == nvals) has_time = false;
        }
        const std::size_t expected = nvals + (has_time.value_or(false) ? 1 : 0);
        if (!has_time || cells.size() != expected)
            throw ParseError("expected " + std::to_string(nvals + 1) + " or " + std::to_string(nvals) +
                                 " columns for " + std::to_string(layout.size()) + " coils, found " +
                                 std::to_string(cells.size()),
                             i + 1);
        row.resize(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_double(cells[c]);
            if (!v) throw ParseError("non-numeric cell '" + std::string(cells[c]) + "'", i + 1);
            row[c] = *v;
        }
        const std::size_t row_index = result.raw_rows++;
        const double* vals = row.data() + (*has_time ? 1 : 0);
        std::vector<CoilSample> frame;
        frame.reserve(layout.size());
        bool ok = true;
        for (std::size_t k = 0; k < layout.size() && ok; ++k) {
            auto s = make_sample(vals + 6 * k);
            if (!s) ok = false;
            else frame.push_back(*s);
        }
        if (!ok) {
            result.dropped.push_back({i + 1, "orientation normal length outside [0.5, 2]"});
            continue;
        }
        const double t = *has_time ? row[0] : static_cast<double>(row_index) * options.frame_period;
        if (!times.empty() && !(t > times.back())) throw ParseError("timestamps not strictly increasing", i + 1);
        times.push_back(t);
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw ParseError("no frames");
    result.set = CoilTrajectorySet::make(layout, std::move(times), std::move(frames));
    return result;
}

std::optional<std::vector<std::string>> csv_header_layout(std::string_view text) {
    for (auto line : split_lines(text)) {
        if (trim(line).empty()) continue;
        auto cells = split_char(line, ',');
        if (parse_double(cells[0])) return std::nullopt;
        std::size_t start = (cells[0] == "time" || cells[0] == "t") ? 1 : 0;
        if ((cells.size() - start) % 6 != 0 || cells.size() == start) return std::nullopt;
        std::vector<std::string> layout;
        for (std::size_t c = start; c < cells.size(); c += 6) {
            std::string coil;
            for (std::size_t k = 0; k < 6; ++k) {
                std::string_view cell = cells[c + k];
                auto us = cell.rfind('_');
                if (us == std::string_view::npos || cell.substr(us + 1) != kComponents[k]) return std::nullopt;
                if (k == 0) coil = std::string(cell.substr(0, us));
                else if (cell.substr(0, us) != coil) return std::nullopt;
            }
            layout.push_back(coil);
        }
        return layout;
    }
    return std::nullopt;
}

std::string write_coil_csv(const CoilTrajectorySet& set) {
    std::string out = "time";
    for (const auto& c : set.coils())
        for (auto comp : kComponents) out += "," + c + "_" + std::string(comp);
    out += '\n';
    for (std::size_t f = 0; f < set.frame_count(); ++f) {
        out += fixed6(set.timestamps()[f]);
        for (const auto& s : set.frame(f)) {
            for (int k = 0; k < 3; ++k) out += "," + fixed6(s.position[k]);
            for (int k = 0; k < 3; ++k) out += "," + fixed6(s.normal[k]);
        }
        out += '\n';
    }
    return out;
}

CoilTrajectorySet synth_trajectories(const TrajectorySynthSpec& spec) {
    if (!(spec.frame_rate > 0.0)) throw ValidationError("frame rate must be positive");
    if (!(spec.duration > 0.0)) throw ValidationError("duration must be positive");
    if (spec.coils.empty()) throw ValidationError("no coils in synthesis spec");
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.frame_rate));
    if (n == 0) throw ValidationError("duration shorter than one frame");

    std::vector<std::string> names;
    for (const auto& c : spec.coils) names.push_back(c.name);
    std::vector<double> times(n);
    std::vector<std::vector<CoilSample>> frames(n);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t f = 0; f < n; ++f) {
        const double t = static_cast<double>(f) / spec.frame_rate;
        times[f] = t;
        frames[f].reserve(spec.coils.size());
        for (const auto& c : spec.coils) {
            Vec3 p;
            for (int k = 0; k < 3; ++k)
                p[k] = c.base[k] + c.amplitude[k] * std::sin(two_pi * c.frequency[k] * t + c.phase[k]);
            frames[f].push_back({p, Vec3::UnitZ()});
        }
    }
    return CoilTrajectorySet::make(std::move(names), std::move(times), std::move(frames));
}

}  // namespace ema
