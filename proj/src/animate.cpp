#include "ema/animate.hpp"

#include "ema/errors.hpp"
#include "ema/fileio.hpp"
#include "ema/format.hpp"
#include "ema/mesh_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace ema {

using nlohmann::json;

std::vector<FrameGap> find_gaps(const std::vector<double>& timestamps) {
    std::vector<FrameGap> gaps;
    if (timestamps.size() < 3) return gaps;
    std::vector<double> deltas(timestamps.size() - 1);
    for (std::size_t i = 1; i < timestamps.size(); ++i) deltas[i - 1] = timestamps[i] - timestamps[i - 1];
    std::vector<double> sorted = deltas;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < deltas.size(); ++i)
        if (deltas[i] > 1.5 * median) gaps.push_back({i, timestamps[i], timestamps[i + 1]});
    return gaps;
}

MeshSequence animate_utterance(const Rig& rig, const CoilTrajectorySet& set, const AnimateOptions& options) {
    for (const auto& h : rig.hooks)
        if (!set.has_coil(h.coil)) throw ValidationError("recording lacks rig coil '" + h.coil + "'");
    if (rig.jaw && !set.has_coil(rig.jaw->coil))
        throw ValidationError("recording lacks jaw coil '" + rig.jaw->coil + "'");

    const FrameWindow window = options.window.value_or(FrameWindow{0, set.frame_count()});
    if (window.begin >= window.end) throw ValidationError("empty frame range");
    if (window.end > set.frame_count()) throw ValidationError("frame range exceeds the recording");
    const std::size_t n = window.end - window.begin;

    MeshSequence seq;
    seq.timestamps.assign(set.timestamps().begin() + static_cast<long>(window.begin),
                          set.timestamps().begin() + static_cast<long>(window.end));
    seq.source_frames.resize(n);
    seq.tongue.resize(n);
    seq.mandible.resize(n);
    seq.tongue_faces = rig.tongue.faces;
    seq.mandible_bind = rig.mandible;
    seq.maxilla = rig.maxilla;

    auto run = [&](std::size_t i) {
        const std::size_t f = window.begin + i;
        const CoilFrame frame = coil_frame(set, f);
        seq.source_frames[i] = f;
        seq.tongue[i] = skin(rig, solve_spline_ik(rig, frame));
        seq.mandible[i] = rig.jaw ? jaw_transform(rig, frame.at(rig.jaw->coil)) : RigidTransform::identity();
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) run(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    seq.gaps = find_gaps(seq.timestamps);
    return seq;
}

SequenceFormat sequence_format_from_string(std::string_view s) {
    if (s == "obj-sequence") return SequenceFormat::obj_sequence;
    if (s == "vertex-csv") return SequenceFormat::vertex_csv;
    throw ValidationError("unknown export format '" + std::string(s) + "'");
}

std::string frame_file_name(std::string_view prefix, std::size_t frame) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06zu.obj", frame);
    return std::string(prefix) + buf;
}

namespace {

std::string sequence_manifest(const MeshSequence& seq) {
    json gaps = json::array();
    for (const auto& g : seq.gaps)
        gaps.push_back({{"after_frame", g.after_frame}, {"start_time", g.start_time}, {"end_time", g.end_time}});
    json j = {{"schema", 1},
              {"frame_count", seq.frame_count()},
              {"timestamps", seq.timestamps},
              {"source_frames", seq.source_frames},
              {"gaps", gaps}};
    return j.dump(1) + "\n";
}

}  // namespace

std::vector<std::filesystem::path> export_sequence(const MeshSequence& seq, const ExportRequest& request,
                                                   const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");

    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file_atomic(dir / name, content);
        written.push_back(dir / name);
    };

    if (request.format == SequenceFormat::obj_sequence) {
        for (std::size_t i = 0; i < seq.frame_count(); ++i) {
            TriMesh tongue{seq.tongue[i], seq.tongue_faces};
            emit(frame_file_name("frame", i), save_obj(tongue));
            TriMesh jaw{seq.mandible[i].apply(seq.mandible_bind.vertices), seq.mandible_bind.faces};
            emit(frame_file_name("mandible", i), save_obj(jaw));
        }
        emit("maxilla.obj", save_obj(seq.maxilla));
    } else {
        std::vector<std::size_t> tracked = request.tracked_vertices;
        const std::size_t nv = seq.tongue.empty() ? 0 : seq.tongue.front().size();
        if (tracked.empty())
            for (std::size_t v = 0; v < nv; ++v) tracked.push_back(v);
        for (auto v : tracked)
            if (v >= nv) throw ValidationError("tracked vertex " + std::to_string(v) + " out of range");
        std::string csv = "frame,time,vertex,x,y,z\n";
        for (std::size_t i = 0; i < seq.frame_count(); ++i)
            for (auto v : tracked) {
                const Vec3& p = seq.tongue[i][v];
                csv += std::to_string(i) + "," + fixed6(seq.timestamps[i]) + "," + std::to_string(v) + "," +
                       fixed6(p.x()) + "," + fixed6(p.y()) + "," + fixed6(p.z()) + "\n";
            }
        emit("vertices.csv", csv);
    }
    emit("sequence.json", sequence_manifest(seq));
    return written;
}

MeshSequence load_obj_sequence(const std::filesystem::path& dir) {
    MeshSequence seq;
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "sequence.json"));
        seq.timestamps = manifest.at("timestamps").get<std::vector<double>>();
        seq.source_frames = manifest.at("source_frames").get<std::vector<std::size_t>>();
        for (const auto& g : manifest.at("gaps"))
            seq.gaps.push_back({g.at("after_frame").get<std::size_t>(), g.at("start_time").get<double>(),
                                g.at("end_time").get<double>()});
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed sequence.json: ") + e.what());
    }
    if (seq.source_frames.size() != seq.timestamps.size()) throw ParseError("sequence.json frame lists disagree");
    for (std::size_t i = 0; i < seq.timestamps.size(); ++i) {
        TriMesh m = load_obj_tri(read_file(dir / frame_file_name("frame", i)));
        if (i == 0) seq.tongue_faces = m.faces;
        else if (m.vertices.size() != seq.tongue.front().size())
            throw ValidationError("frame " + std::to_string(i) + " vertex count differs from frame 0");
        seq.tongue.push_back(std::move(m.vertices));
        seq.mandible.push_back(RigidTransform::identity());
    }
    return seq;
}

}  // namespace ema
