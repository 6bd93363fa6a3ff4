#pragma once

#include "ema/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ema {

// Frame period applied to CSV input without a time column (200 Hz).
inline constexpr double kDefaultFramePeriod = 0.005;

struct CoilSample {
    Vec3 position = Vec3::Zero();  // mm
    Vec3 normal = Vec3::UnitZ();   // unit orientation normal

    bool operator==(const CoilSample&) const = default;
};

/// An EMA recording: one sample per coil per frame, frames in time order.
///
/// Samples are stored frame-major: `frames[f][c]` is coil `coils[c]` at
/// `timestamps[f]`. Construct through `make()` (or the parsers), which
/// enforces the shape and ordering invariants.
class CoilTrajectorySet {
public:
    CoilTrajectorySet() = default;

    static CoilTrajectorySet make(std::vector<std::string> coils, std::vector<double> timestamps,
                                  std::vector<std::vector<CoilSample>> frames);

    const std::vector<std::string>& coils() const { return coils_; }
    const std::vector<double>& timestamps() const { return timestamps_; }
    std::size_t frame_count() const { return timestamps_.size(); }
    std::size_t coil_count() const { return coils_.size(); }

    std::optional<std::size_t> coil_index(std::string_view name) const;
    bool has_coil(std::string_view name) const { return coil_index(name).has_value(); }

    const std::vector<CoilSample>& frame(std::size_t f) const { return frames_.at(f); }
    const CoilSample& sample(std::size_t f, std::size_t c) const { return frames_.at(f).at(c); }
    // Throws ValidationError for an unknown coil.
    const CoilSample& sample(std::size_t f, std::string_view coil) const;

    // Frames [begin, end), timestamps preserved.
    CoilTrajectorySet slice(std::size_t begin, std::size_t end) const;

    bool operator==(const CoilTrajectorySet&) const = default;

private:
    std::vector<std::string> coils_;
    std::vector<double> timestamps_;
    std::vector<std::vector<CoilSample>> frames_;
};

struct DroppedRow {
    std::size_t line;    // 1-based line of the rejected data row
    std::string reason;
};

struct TrackParseResult {
    CoilTrajectorySet set;
    std::vector<DroppedRow> dropped;
    std::size_t raw_rows = 0;  // data rows seen, retained + dropped
};

// Brings a normal to unit length when its length is within [0.5, 2];
// returns nullopt for anything outside that band (corrupt frame).
std::optional<Vec3> normalize_orientation(const Vec3& n);

// ASCII EST_Track subset. Rows flagged other than `1`, and rows with a
// normal outside the accepted length band, are dropped and reported.
TrackParseResult parse_est_ascii(std::string_view text);

struct CsvOptions {
    double frame_period = kDefaultFramePeriod;  // used only without a time column
};

// Columns: [time,] then x,y,z,nx,ny,nz for each coil of `layout`.
TrackParseResult parse_coil_csv(std::string_view text, const std::vector<std::string>& layout,
                                const CsvOptions& options = {});

// Coil layout recovered from a `time,T1_x,...` header row, if present.
std::optional<std::vector<std::string>> csv_header_layout(std::string_view text);

// Header row plus one row per frame, 6 decimals, time column included.
std::string write_coil_csv(const CoilTrajectorySet& set);

struct SynthCoil {
    std::string name;
    Vec3 base = Vec3::Zero();       // mm
    Vec3 amplitude = Vec3::Zero();  // mm
    Vec3 frequency = Vec3::Zero();  // Hz
    Vec3 phase = Vec3::Zero();      // rad
};

struct TrajectorySynthSpec {
    std::vector<SynthCoil> coils;
    double frame_rate = 200.0;  // Hz
    double duration = 1.0;      // s
};

// position(t) = base + amplitude * sin(2 pi freq t + phase), per axis;
// normals fixed at +Z. Frame count is round(duration * frame_rate).
CoilTrajectorySet synth_trajectories(const TrajectorySynthSpec& spec);

}  // namespace ema
