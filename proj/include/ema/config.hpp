#pragma once

#include "ema/rig.hpp"
#include "ema/trackio.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ema {

inline constexpr int kSchemaVersion = 1;

struct TongueSynthSpec {
    Vec3 semi_axes{20.0, 15.0, 35.0};
    int rings = 10;
    int segments = 44;
};

struct SynthDocument {
    TrajectorySynthSpec trajectories;
    std::optional<TongueSynthSpec> tongue;
};

struct ExportOptions {
    std::string format = "obj-sequence";      // or "vertex-csv"
    std::vector<std::size_t> tracked_vertices; // vertex-csv; empty = rig tracking vertices
};

struct PipelineConfig {
    std::optional<std::filesystem::path> ema;
    std::optional<std::filesystem::path> tongue;
    std::optional<std::filesystem::path> maxilla;
    std::optional<std::filesystem::path> mandible;
    std::vector<std::string> coil_layout;      // CSV layout; empty = from header
    std::string plane = "x=0";
    Vec3 up = Vec3::UnitY();
    RigConfig rig;
    ExportOptions export_options;
    std::size_t palate_subsample = 1;
    std::size_t bind_frame = 0;
    double frame_period = kDefaultFramePeriod;
};

// All parsers reject unknown keys and a missing or unsupported "schema".
// Relative paths are resolved against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {});
RigConfig rig_config_from_json(const nlohmann::json& j);
nlohmann::json rig_config_to_json(const RigConfig& cfg);
SynthDocument parse_synth_spec(std::string_view text);

}  // namespace ema
