// ema: command-line front end for the EMA-to-animation pipeline.
//
// Exit codes: 0 success, 2 parse or validation error, 3 numeric failure,
// 4 I/O error. Every output file is written to a temporary name and renamed
// on success.

#include "ema/animate.hpp"
#include "ema/bvh.hpp"
#include "ema/config.hpp"
#include "ema/errors.hpp"
#include "ema/eval.hpp"
#include "ema/fileio.hpp"
#include "ema/format.hpp"
#include "ema/mesh_io.hpp"
#include "ema/register.hpp"
#include "ema/rig.hpp"
#include "ema/rig_io.hpp"
#include "ema/trackio.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace ema;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

std::vector<std::string> split_names(const std::string& list) {
    std::vector<std::string> out;
    for (auto cell : split_char(list, ','))
        if (!cell.empty()) out.emplace_back(cell);
    return out;
}

Vec3 parse_vec3(const std::string& s, const char* what) {
    const auto cells = split_char(s, ',');
    Vec3 v;
    if (cells.size() != 3) throw ValidationError(std::string(what) + " must be three comma-separated numbers");
    for (int k = 0; k < 3; ++k) {
        auto d = parse_double(cells[static_cast<std::size_t>(k)]);
        if (!d) throw ValidationError(std::string("bad number in ") + what);
        v[k] = *d;
    }
    return v;
}

struct RecordingSource {
    std::vector<std::string> layout;  // CSV only; empty = header row
    double frame_period = kDefaultFramePeriod;
};

// EST when the text opens with the EST magic, CSV otherwise.
CoilTrajectorySet load_recording(const fs::path& path, const RecordingSource& src) {
    const std::string text = read_file(path);
    TrackParseResult r;
    if (trim(text).starts_with("EST_File")) {
        r = parse_est_ascii(text);
    } else {
        std::vector<std::string> layout = src.layout;
        if (layout.empty()) {
            auto from_header = csv_header_layout(text);
            if (!from_header) throw ParseError("CSV has no header row; pass --layout");
            layout = *from_header;
        }
        r = parse_coil_csv(text, layout, CsvOptions{src.frame_period});
    }
    for (const auto& d : r.dropped)
        std::cerr << "warning: " << path.string() << ": line " << d.line << " dropped (" << d.reason << ")\n";
    return r.set;
}

bool has_extension(const fs::path& p, const char* ext) {
    std::string e = p.extension().string();
    for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ext;
}

TriMesh load_mesh(const fs::path& path) {
    const std::string text = read_file(path);
    return has_extension(path, ".ply") ? load_ply_tri(text) : load_obj_tri(text);
}

// Vertices of a PLY point cloud or of any mesh file.
Points load_points(const fs::path& path) {
    const std::string text = read_file(path);
    return has_extension(path, ".ply") ? load_ply_points(text) : parse_obj(text).vertices;
}

CoilFrame bind_frame_of(const CoilTrajectorySet& set, std::size_t frame) {
    if (frame >= set.frame_count())
        throw ValidationError("bind frame " + std::to_string(frame) + " beyond the recording (" +
                              std::to_string(set.frame_count()) + " frames)");
    return coil_frame(set, frame);
}

void report(const std::string& line) { std::cout << line << '\n'; }

// --- subcommands -------------------------------------------------------

struct ConvertArgs {
    fs::path in, out;
    std::string rotations = "normals";
    std::string layout;
    double frame_period = kDefaultFramePeriod;
};

int run_convert(const ConvertArgs& a) {
    const RotationMode mode = rotation_mode_from_string(a.rotations);
    std::string text;
    if (has_extension(a.in, ".bvh")) {
        // BVH back to CSV.
        const CoilTrajectorySet set = from_bvh(parse_bvh(read_file(a.in)));
        write_file_atomic(a.out, write_coil_csv(set));
        report("wrote " + a.out.string() + " (" + std::to_string(set.coil_count()) + " coils, " +
               std::to_string(set.frame_count()) + " frames)");
        return 0;
    }
    const auto set = load_recording(a.in, {split_names(a.layout), a.frame_period});
    const BvhDocument doc = to_bvh(set, mode);
    write_file_atomic(a.out, write_bvh(doc));
    report("wrote " + a.out.string() + " (" + std::to_string(doc.roots.size()) + " roots, " +
           std::to_string(doc.frame_count) + " frames)");
    return 0;
}

struct PalateArgs {
    fs::path in, out;
    std::string coils = "T1,T2,T3";
    std::string plane = "x=0";
    std::string up = "0,1,0";
    std::string layout;
    std::size_t subsample = 1;
};

int run_palate(const PalateArgs& a) {
    const auto set = load_recording(a.in, {split_names(a.layout), kDefaultFramePeriod});
    PalateOptions opt;
    opt.subsample = a.subsample;
    opt.up = parse_vec3(a.up, "--up");
    const PointCloud cloud = palate_contour(set, split_names(a.coils), parse_plane(a.plane), opt);
    write_file_atomic(a.out, save_ply_points(cloud.points));
    report("wrote " + a.out.string() + " (" + std::to_string(cloud.points.size()) + " contour points)");
    return 0;
}

struct RegisterArgs {
    fs::path src, dst, out, landmarks;
    int max_iterations = 100;
    double eps = 1e-10;
};

// {"schema": 1, "src": [[x,y,z], ...], "dst": [[x,y,z], ...]}
RigidTransform landmark_alignment(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("landmarks: invalid JSON: ") + e.what());
    }
    auto points = [&](const char* key) {
        Points out;
        if (!j.contains(key) || !j[key].is_array()) throw ParseError(std::string("landmarks: missing '") + key + "' array");
        for (const auto& p : j[key]) {
            if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
                throw ParseError("landmarks: points must be arrays of 3 numbers");
            out.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
        return out;
    };
    if (!j.is_object() || j.value("schema", 0) != kSchemaVersion) throw ParseError("landmarks: missing or unsupported schema");
    for (const auto& [key, _] : j.items())
        if (key != "schema" && key != "src" && key != "dst") throw ParseError("landmarks: unknown key '" + key + "'");
    return umeyama_rigid(points("src"), points("dst"));
}

int run_register(const RegisterArgs& a) {
    const Points src = load_points(a.src);
    const TriMesh dst = load_mesh(a.dst);
    const RigidTransform init = a.landmarks.empty() ? RigidTransform::identity() : landmark_alignment(a.landmarks);
    IcpParams params;
    params.max_iterations = a.max_iterations;
    params.convergence_eps = a.eps;
    const IcpResult r = icp_point_to_mesh(src, dst, init, params);
    write_file_atomic(a.out, write_transform(r.transform));
    report("wrote " + a.out.string() + " (rms " + fixed6(r.rms) + " mm after " + std::to_string(r.iterations) +
           " iterations)");
    return 0;
}

struct BuildRigArgs {
    fs::path mesh, ema, config, out, mandible, maxilla;
};

int run_build_rig(const BuildRigArgs& a) {
    const PipelineConfig cfg = parse_pipeline_config(read_file(a.config), a.config.parent_path());
    const fs::path mesh = !a.mesh.empty() ? a.mesh : cfg.tongue.value_or(fs::path{});
    const fs::path ema = !a.ema.empty() ? a.ema : cfg.ema.value_or(fs::path{});
    if (mesh.empty()) throw ValidationError("no tongue mesh: pass --mesh or set inputs.tongue");
    if (ema.empty()) throw ValidationError("no recording: pass --ema or set inputs.ema");
    const fs::path mandible = !a.mandible.empty() ? a.mandible : cfg.mandible.value_or(fs::path{});
    const fs::path maxilla = !a.maxilla.empty() ? a.maxilla : cfg.maxilla.value_or(fs::path{});

    const auto set = load_recording(ema, {cfg.coil_layout, cfg.frame_period});
    const Rig rig = build_rig(load_mesh(mesh), bind_frame_of(set, cfg.bind_frame), cfg.rig,
                              mandible.empty() ? TriMesh{} : load_mesh(mandible),
                              maxilla.empty() ? TriMesh{} : load_mesh(maxilla));
    write_file_atomic(a.out, write_rig(rig));
    report("wrote " + a.out.string() + " (" + std::to_string(rig.chain.joint_count()) + " joints, " +
           std::to_string(rig.weights.unskinned.size()) + " unskinned vertices)");
    if (!rig.weights.unskinned.empty())
        std::cerr << "warning: " << rig.weights.unskinned.size() << " tongue vertices lie outside every envelope\n";
    return 0;
}

struct AnimateArgs {
    fs::path rig, ema, out_dir;
    std::string format = "obj-sequence";
    std::string layout;
    std::string tracked;
    double frame_period = kDefaultFramePeriod;
    unsigned workers = 0;
    long long begin = -1;
    long long end = -1;
};

int run_animate(const AnimateArgs& a) {
    const Rig rig = parse_rig(read_file(a.rig));
    const auto set = load_recording(a.ema, {split_names(a.layout), a.frame_period});
    AnimateOptions opt;
    opt.workers = a.workers ? a.workers : std::max(1u, std::thread::hardware_concurrency());
    if (a.begin >= 0 || a.end >= 0) {
        const auto b = static_cast<std::size_t>(std::max(0LL, a.begin));
        const auto e = a.end >= 0 ? static_cast<std::size_t>(a.end) : set.frame_count();
        opt.window = FrameWindow{b, e};
    }
    const MeshSequence seq = animate_utterance(rig, set, opt);
    ExportRequest req;
    req.format = sequence_format_from_string(a.format);
    for (const auto& v : split_names(a.tracked)) {
        auto idx = parse_int(v);
        if (!idx || *idx < 0) throw ValidationError("bad vertex id '" + v + "' in --tracked");
        req.tracked_vertices.push_back(static_cast<std::size_t>(*idx));
    }
    if (req.format == SequenceFormat::vertex_csv && req.tracked_vertices.empty()) {
        std::vector<std::string> coils;
        for (const auto& h : rig.hooks)
            if (std::find(coils.begin(), coils.end(), h.coil) == coils.end() && rig.config.anchor_coil != h.coil)
                coils.push_back(h.coil);
        req.tracked_vertices = select_tracking_vertices(rig, coils);
    }
    const auto files = export_sequence(seq, req, a.out_dir);
    for (const auto& g : seq.gaps)
        std::cerr << "warning: gap after frame " << g.after_frame << " (" << fixed6(g.start_time) << " s to "
                  << fixed6(g.end_time) << " s)\n";
    report("wrote " + std::to_string(files.size()) + " files to " + a.out_dir.string() + " (" +
           std::to_string(seq.frame_count()) + " frames)");
    return 0;
}

struct EvaluateArgs {
    fs::path rig, ema, seq, out;
    std::string coils;
    std::string layout;
    double frame_period = kDefaultFramePeriod;
};

int run_evaluate(const EvaluateArgs& a) {
    const Rig rig = parse_rig(read_file(a.rig));
    const auto set = load_recording(a.ema, {split_names(a.layout), a.frame_period});
    const MeshSequence seq = load_obj_sequence(a.seq);
    std::vector<std::string> coils = split_names(a.coils);
    if (coils.empty())
        for (const auto& h : rig.hooks)
            if (rig.config.anchor_coil != h.coil) coils.push_back(h.coil);
    const auto vertices = select_tracking_vertices(rig, coils);
    std::vector<CoilVertexPair> pairs;
    for (std::size_t i = 0; i < coils.size(); ++i) pairs.push_back({coils[i], vertices[i]});
    const CorrelationReport r = trajectory_correlation(seq, set, pairs);
    write_file_atomic(a.out, write_report(r));
    report("wrote " + a.out.string() + " (mean r " + fixed6(r.mean_r) + " over " + std::to_string(r.defined_count) +
           " entries, " + std::to_string(r.undefined().size()) + " undefined)");
    return 0;
}

struct SynthArgs {
    fs::path spec, out, tongue_out;
    double noise = 0.0;
};

int run_synth(const SynthArgs& a, std::uint64_t seed) {
    const SynthDocument doc = parse_synth_spec(read_file(a.spec));
    CoilTrajectorySet set = synth_trajectories(doc.trajectories);
    if (a.noise < 0.0) throw ValidationError("--noise must be non-negative");
    if (a.noise > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, a.noise);
        std::vector<std::vector<CoilSample>> frames;
        for (std::size_t f = 0; f < set.frame_count(); ++f) {
            auto row = set.frame(f);
            for (auto& s : row) s.position += Vec3(gauss(rng), gauss(rng), gauss(rng));
            frames.push_back(std::move(row));
        }
        set = CoilTrajectorySet::make(set.coils(), set.timestamps(), std::move(frames));
    }
    if (!a.tongue_out.empty()) {
        const TongueSynthSpec t = doc.tongue.value_or(TongueSynthSpec{});
        const TriMesh tongue = make_half_ellipsoid(t.semi_axes, t.rings, t.segments);
        write_file_atomic(a.tongue_out, save_obj(tongue));
        report("wrote " + a.tongue_out.string() + " (" + std::to_string(tongue.vertices.size()) + " vertices)");
    }
    write_file_atomic(a.out, write_coil_csv(set));
    report("wrote " + a.out.string() + " (" + std::to_string(set.coil_count()) + " coils, " +
           std::to_string(set.frame_count()) + " frames)");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMA coil recordings to BVH, rigged tongue animation and fidelity reports"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "Seed for randomized operations")->capture_default_str();

    ConvertArgs conv;
    auto* convert = app.add_subcommand("convert", "EST/CSV recording to BVH (or BVH back to CSV)");
    convert->add_option("--in", conv.in, "EST or CSV recording, or a BVH file")->required();
    convert->add_option("--out", conv.out, "Output BVH (or CSV for BVH input)")->required();
    convert->add_option("--rotations", conv.rotations, "normals | euler")->check(CLI::IsMember({"normals", "euler"}))->capture_default_str();
    convert->add_option("--layout", conv.layout, "CSV coil names, comma-separated (default: header row)");
    convert->add_option("--frame-period", conv.frame_period, "Seconds per frame for CSV without time column")->capture_default_str();

    PalateArgs pal;
    auto* palate = app.add_subcommand("palate", "Palate contour from tongue-coil positions");
    palate->add_option("--in", pal.in, "EST or CSV recording")->required();
    palate->add_option("--out", pal.out, "Output PLY point cloud")->required();
    palate->add_option("--coils", pal.coils, "Tongue coils, comma-separated")->capture_default_str();
    palate->add_option("--plane", pal.plane, "x=c | y=c | z=c | px,py,pz,nx,ny,nz")->capture_default_str();
    palate->add_option("--up", pal.up, "Vertical axis selecting the upper branch")->capture_default_str();
    palate->add_option("--subsample", pal.subsample, "Keep every n-th frame")->capture_default_str();
    palate->add_option("--layout", pal.layout, "CSV coil names, comma-separated");

    RegisterArgs reg;
    auto* registration = app.add_subcommand("register", "Rigid registration of a point set onto a mesh");
    registration->add_option("--src", reg.src, "Source points (PLY or OBJ)")->required();
    registration->add_option("--dst", reg.dst, "Target mesh (OBJ or PLY)")->required();
    registration->add_option("--out", reg.out, "Output transform (12 numbers)")->required();
    registration->add_option("--landmarks", reg.landmarks, "JSON landmark pairs for the initial alignment");
    registration->add_option("--max-iterations", reg.max_iterations, "ICP iteration bound")->capture_default_str();
    registration->add_option("--eps", reg.eps, "ICP convergence threshold on RMS (mm)")->capture_default_str();

    BuildRigArgs br;
    auto* build = app.add_subcommand("build-rig", "Rig a tongue mesh from a coil bind frame");
    build->add_option("--mesh", br.mesh, "Tongue mesh (default: inputs.tongue)");
    build->add_option("--ema", br.ema, "Recording providing the bind frame (default: inputs.ema)");
    build->add_option("--config", br.config, "Pipeline configuration (JSON)")->required();
    build->add_option("--out", br.out, "Output rig document")->required();
    build->add_option("--mandible", br.mandible, "Mandible mesh (default: inputs.mandible)");
    build->add_option("--maxilla", br.maxilla, "Maxilla mesh (default: inputs.maxilla)");

    AnimateArgs an;
    auto* animate = app.add_subcommand("animate", "Drive a rig with a recording and export meshes");
    animate->add_option("--rig", an.rig, "Rig document")->required();
    animate->add_option("--ema", an.ema, "EST or CSV recording")->required();
    animate->add_option("--out-dir", an.out_dir, "Output directory")->required();
    animate->add_option("--format", an.format, "obj-sequence | vertex-csv")
        ->check(CLI::IsMember({"obj-sequence", "vertex-csv"}))
        ->capture_default_str();
    animate->add_option("--tracked", an.tracked, "Vertex ids for vertex-csv (default: tracking vertices)");
    animate->add_option("--begin", an.begin, "First frame of the window");
    animate->add_option("--end", an.end, "One past the last frame of the window");
    animate->add_option("--workers", an.workers, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    animate->add_option("--layout", an.layout, "CSV coil names, comma-separated");
    animate->add_option("--frame-period", an.frame_period, "Seconds per frame for CSV without time column");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Correlate coil and vertex trajectories");
    evaluate->add_option("--rig", ev.rig, "Rig document")->required();
    evaluate->add_option("--ema", ev.ema, "EST or CSV recording")->required();
    evaluate->add_option("--seq", ev.seq, "obj-sequence directory")->required();
    evaluate->add_option("--out", ev.out, "Output report (JSON)")->required();
    evaluate->add_option("--coils", ev.coils, "Coils to evaluate (default: rig hook coils)");
    evaluate->add_option("--layout", ev.layout, "CSV coil names, comma-separated");
    evaluate->add_option("--frame-period", ev.frame_period, "Seconds per frame for CSV without time column");

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "Synthetic sinusoidal trajectories (and tongue mesh)");
    synth->add_option("--spec", sy.spec, "Synthesis spec (JSON)")->required();
    synth->add_option("--out", sy.out, "Output CSV")->required();
    synth->add_option("--tongue-out", sy.tongue_out, "Also write the half-ellipsoid tongue mesh (OBJ)");
    synth->add_option("--noise", sy.noise, "Gaussian position noise sigma (mm), seeded by --seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*convert) return run_convert(conv);
        if (*palate) return run_palate(pal);
        if (*registration) return run_register(reg);
        if (*build) return run_build_rig(br);
        if (*animate) return run_animate(an);
        if (*evaluate) return run_evaluate(ev);
        if (*synth) return run_synth(sy, seed);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    }
    return kExitParse;
}
