#pragma once

#include "ema/rig.hpp"
#include "ema/trackio.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ema {

struct FrameWindow {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

// A gap between consecutive frames longer than 1.5 median frame periods,
// left by frames dropped at ingestion. Gaps are reported, never filled.
struct FrameGap {
    std::size_t after_frame = 0;  // sequence index preceding the gap
    double start_time = 0.0;
    double end_time = 0.0;
};

struct MeshSequence {
    std::vector<double> timestamps;
    std::vector<std::size_t> source_frames;   // index into the input recording
    std::vector<Points> tongue;               // per frame, bind-mesh vertex order
    std::vector<Tri> tongue_faces;
    std::vector<RigidTransform> mandible;     // per frame
    TriMesh mandible_bind;
    TriMesh maxilla;                          // static
    std::vector<FrameGap> gaps;

    std::size_t frame_count() const { return timestamps.size(); }
};

struct AnimateOptions {
    std::optional<FrameWindow> window;
    unsigned workers = 1;  // output is independent of the worker count
};

MeshSequence animate_utterance(const Rig& rig, const CoilTrajectorySet& set, const AnimateOptions& options = {});

std::vector<FrameGap> find_gaps(const std::vector<double>& timestamps);

enum class SequenceFormat { obj_sequence, vertex_csv };

SequenceFormat sequence_format_from_string(std::string_view s);

struct ExportRequest {
    SequenceFormat format = SequenceFormat::obj_sequence;
    std::vector<std::size_t> tracked_vertices;  // vertex-csv only
};

// Writes the sequence into `dir` (created if needed). Every file goes
// through a temporary name and is renamed on success. Returns the paths
// written, in order.
std::vector<std::filesystem::path> export_sequence(const MeshSequence& seq, const ExportRequest& request,
                                                   const std::filesystem::path& dir);

// Reads an obj-sequence directory back (tongue frames and timestamps).
MeshSequence load_obj_sequence(const std::filesystem::path& dir);

std::string frame_file_name(std::string_view prefix, std::size_t frame);

}  // namespace ema
