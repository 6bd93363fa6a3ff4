#include "ema/eval.hpp"

#include "ema/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace ema {

namespace {

// Spread within rounding noise of the magnitude: the mean of identical
// values need not equal them, so a zero-variance test alone misses these.
bool is_constant(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo <= 1e-12 * std::max({1.0, std::abs(*lo), std::abs(*hi)});
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("correlation series differ in length");
    if (x.size() < 2) throw ValidationError("correlation needs at least 2 samples");
    if (is_constant(x) || is_constant(y)) return std::nullopt;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::size_t> select_tracking_vertices(const Rig& rig, const std::vector<std::string>& coils) {
    if (rig.tongue.vertices.empty()) throw ValidationError("rig tongue mesh has no vertices");
    std::vector<std::size_t> out;
    for (const auto& coil : coils) {
        auto it = rig.bind_frame.find(coil);
        if (it == rig.bind_frame.end()) throw ValidationError("coil '" + coil + "' not in rig bind frame");
        std::size_t best = 0;
        double best_d = (rig.tongue.vertices[0] - it->second).squaredNorm();
        for (std::size_t v = 1; v < rig.tongue.vertices.size(); ++v) {
            const double d = (rig.tongue.vertices[v] - it->second).squaredNorm();
            if (d < best_d) best_d = d, best = v;
        }
        out.push_back(best);
    }
    return out;
}

std::vector<const CorrelationEntry*> CorrelationReport::undefined() const {
    std::vector<const CorrelationEntry*> out;
    for (const auto& e : entries)
        if (!e.r) out.push_back(&e);
    return out;
}

CorrelationReport trajectory_correlation(const MeshSequence& seq, const CoilTrajectorySet& set,
                                         const std::vector<CoilVertexPair>& pairs) {
    const std::size_t n = seq.frame_count();
    if (n != seq.tongue.size()) throw ValidationError("mesh sequence is inconsistent");
    std::vector<std::size_t> source = seq.source_frames;
    if (source.empty())
        for (std::size_t i = 0; i < n; ++i) source.push_back(i);
    if (source.size() != n) throw ValidationError("mesh sequence is inconsistent");
    for (std::size_t i = 0; i < n; ++i) {
        if (source[i] >= set.frame_count() || std::abs(set.timestamps()[source[i]] - seq.timestamps[i]) > 1e-6)
            throw ValidationError("frame misalignment between mesh sequence and recording at frame " + std::to_string(i));
    }

    CorrelationReport report;
    double sum = 0.0;
    std::vector<double> coil_series(n), vertex_series(n);
    for (const auto& pair : pairs) {
        auto c = set.coil_index(pair.coil);
        if (!c) throw ValidationError("coil '" + pair.coil + "' not in recording");
        for (int axis = 0; axis < 3; ++axis) {
            for (std::size_t i = 0; i < n; ++i) {
                if (pair.vertex >= seq.tongue[i].size()) throw ValidationError("tracked vertex out of range");
                coil_series[i] = set.sample(source[i], *c).position[axis];
                vertex_series[i] = seq.tongue[i][pair.vertex][axis];
            }
            CorrelationEntry e{pair.coil, pair.vertex, static_cast<char>('x' + axis), pearson(coil_series, vertex_series)};
            if (e.r) {
                sum += *e.r;
                ++report.defined_count;
            }
            report.entries.push_back(std::move(e));
        }
    }
    report.mean_r = report.defined_count ? sum / static_cast<double>(report.defined_count) : 0.0;
    return report;
}

std::string write_report(const CorrelationReport& report) {
    using nlohmann::json;
    json entries = json::array(), undefined = json::array();
    for (const auto& e : report.entries) {
        json j = {{"coil", e.coil}, {"vertex", e.vertex}, {"axis", std::string(1, e.axis)}};
        j["r"] = e.r ? json(*e.r) : json(nullptr);
        entries.push_back(j);
        if (!e.r) undefined.push_back({{"coil", e.coil}, {"axis", std::string(1, e.axis)}});
    }
    json j = {{"schema", 1},
              {"entries", entries},
              {"mean_r", report.mean_r},
              {"defined_count", report.defined_count},
              {"undefined", undefined}};
    return j.dump(2) + "\n";
}

}  // namespace ema
