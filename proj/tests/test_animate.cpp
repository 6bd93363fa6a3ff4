#include "doctest.h"
#include "test_support.hpp"

#include "ema/animate.hpp"
#include "ema/errors.hpp"
#include "ema/fileio.hpp"
#include "ema/mesh_io.hpp"

#include <complex>
#include <filesystem>

using namespace ema;
namespace fs = std::filesystem;

namespace {

CoilTrajectorySet constant_recording(const CoilFrame& frame, std::size_t frames) {
    std::vector<std::string> names;
    std::vector<CoilSample> row;
    for (const auto& [name, p] : frame) names.push_back(name), row.push_back({p, Vec3::UnitZ()});
    std::vector<double> ts;
    for (std::size_t f = 0; f < frames; ++f) ts.push_back(0.005 * static_cast<double>(f));
    return CoilTrajectorySet::make(names, ts, std::vector<std::vector<CoilSample>>(frames, row));
}

// Tongue coils oscillating about their bind positions, other coils fixed.
CoilTrajectorySet oscillating(const CoilFrame& bind, double freq, double duration) {
    TrajectorySynthSpec spec;
    spec.duration = duration;
    double phase = 0.0;
    for (const auto& [name, p] : bind) {
        const bool tongue = name[0] == 'T';
        spec.coils.push_back({name, p, tongue ? Vec3(0, 4, 3) : Vec3::Zero(), Vec3::Constant(freq), Vec3::Constant(phase)});
        phase += 0.7;
    }
    return synth_trajectories(spec);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ema_test_" + name)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().starts_with(prefix)) ++n;
    return n;
}

}  // namespace

TEST_CASE("animate: bind-frame recording reproduces the bind mesh") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    const auto seq = animate_utterance(rig, constant_recording(fx.bind, 12));
    CHECK(seq.frame_count() == 12);
    for (std::size_t f = 0; f < seq.frame_count(); ++f) {
        REQUIRE(seq.tongue[f].size() == fx.tongue.vertices.size());
        for (std::size_t v = 0; v < fx.tongue.vertices.size(); ++v) CHECK((seq.tongue[f][v] - fx.tongue.vertices[v]).norm() <= 1e-9);
        CHECK((seq.mandible[f].rotation - Mat3::Identity()).norm() <= 1e-12);
    }
    CHECK(seq.gaps.empty());
}

TEST_CASE("animate: windowing and errors") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    const auto rec = oscillating(fx.bind, 2.0, 2.5);
    REQUIRE(rec.frame_count() == 500);
    AnimateOptions opt;
    opt.window = FrameWindow{0, 10};
    const auto seq = animate_utterance(rig, rec, opt);
    CHECK(seq.frame_count() == 10);
    CHECK(seq.timestamps.back() == rec.timestamps()[9]);
    opt.window = FrameWindow{5, 5};
    CHECK_THROWS_AS(animate_utterance(rig, rec, opt), ValidationError);
    opt.window = FrameWindow{490, 501};
    CHECK_THROWS_AS(animate_utterance(rig, rec, opt), ValidationError);
    CoilFrame partial = fx.bind;
    partial.erase("T1");
    CHECK_THROWS_WITH_AS(animate_utterance(rig, constant_recording(partial, 3)), doctest::Contains("T1"), ValidationError);
    partial = fx.bind;
    partial.erase("jaw");
    CHECK_THROWS_AS(animate_utterance(rig, constant_recording(partial, 3)), ValidationError);
}

TEST_CASE("animate: output is periodic with the input") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    const double freq = 2.0;
    const auto rec = oscillating(fx.bind, freq, 2.0);
    const auto seq = animate_utterance(rig, rec);
    // Tip-most vertex of the tongue.
    std::size_t tip = 0;
    for (std::size_t v = 1; v < fx.tongue.vertices.size(); ++v)
        if (fx.tongue.vertices[v].z() > fx.tongue.vertices[tip].z()) tip = v;
    const std::size_t period = 100;  // 200 Hz / 2 Hz
    for (std::size_t f = 0; f + period < seq.frame_count(); ++f)
        CHECK((seq.tongue[f + period][tip] - seq.tongue[f][tip]).norm() < 1e-6);
    // Dominant non-DC DFT bin of the vertical motion sits at the input frequency.
    const std::size_t n = seq.frame_count();
    double mean = 0.0;
    for (std::size_t f = 0; f < n; ++f) mean += seq.tongue[f][tip].y() / static_cast<double>(n);
    std::size_t peak = 0;
    double peak_mag = -1.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t f = 0; f < n; ++f)
            acc += (seq.tongue[f][tip].y() - mean) * std::polar(1.0, -2.0 * std::numbers::pi * double(k * f) / double(n));
        if (std::abs(acc) > peak_mag) peak_mag = std::abs(acc), peak = k;
    }
    CHECK(peak == static_cast<std::size_t>(freq * 2.0));
}

TEST_CASE("animate: worker count and frame order do not change results") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    const auto rec = oscillating(fx.bind, 1.5, 0.2);
    const auto serial = animate_utterance(rig, rec);
    AnimateOptions par;
    par.workers = 4;
    const auto parallel = animate_utterance(rig, rec, par);
    CHECK(parallel.tongue == serial.tongue);
    for (std::size_t f = rec.frame_count(); f-- > 0;) {
        AnimateOptions one;
        one.window = FrameWindow{f, f + 1};
        const auto single = animate_utterance(rig, rec, one);
        CHECK(single.tongue[0] == serial.tongue[f]);
        CHECK(single.source_frames[0] == f);
    }
}

TEST_CASE("animate: dropped frames are reported as gaps") {
    const std::vector<double> ts = {0.0, 0.005, 0.010, 0.025, 0.030, 0.035, 0.045};
    const auto gaps = find_gaps(ts);
    REQUIRE(gaps.size() == 2);
    CHECK(gaps[0].after_frame == 2);
    CHECK(gaps[0].start_time == 0.010);
    CHECK(gaps[0].end_time == 0.025);
    CHECK(gaps[1].after_frame == 5);
    CHECK(find_gaps({0.0, 0.005, 0.010, 0.0149}).empty());
}

TEST_CASE("export: obj sequence file set, determinism and reload") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible, testing::exploded_cube());
    AnimateOptions opt;
    opt.window = FrameWindow{0, 3};
    const auto seq = animate_utterance(rig, oscillating(fx.bind, 3.0, 0.1), opt);
    TempDir a("obj_a"), b("obj_b");
    const auto files = export_sequence(seq, {}, a.path);
    CHECK(count_files(a.path, "frame_") == 3);
    CHECK(count_files(a.path, "mandible_") == 3);
    CHECK(count_files(a.path, "maxilla") == 1);
    CHECK(fs::exists(a.path / "frame_000002.obj"));
    CHECK(fs::exists(a.path / "sequence.json"));
    CHECK(files.size() == 8);
    for (const auto& e : fs::directory_iterator(a.path)) CHECK(e.path().extension() != ".tmp");
    export_sequence(seq, {}, b.path);
    for (const auto& f : files) CHECK(read_file(f) == read_file(b.path / f.filename()));

    const auto back = load_obj_sequence(a.path);
    REQUIRE(back.frame_count() == 3);
    CHECK(back.timestamps == seq.timestamps);
    for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t v = 0; v < seq.tongue[f].size(); ++v)
            CHECK((back.tongue[f][v] - seq.tongue[f][v]).cwiseAbs().maxCoeff() <= 5e-7);
    // Mandible frames carry the hinge rotation.
    const TriMesh jaw1 = load_obj_tri(read_file(a.path / "mandible_000001.obj"));
    CHECK((jaw1.vertices[0] - seq.mandible[1].apply(fx.mandible.vertices[0])).cwiseAbs().maxCoeff() <= 5e-7);
}

TEST_CASE("export: vertex csv arity and I/O failure") {
    const auto fx = testing::tongue_fixture();
    const Rig rig = build_rig(fx.tongue, fx.bind, fx.config, fx.mandible);
    AnimateOptions opt;
    opt.window = FrameWindow{0, 4};
    const auto seq = animate_utterance(rig, oscillating(fx.bind, 3.0, 0.1), opt);
    TempDir d("csv");
    ExportRequest req{SequenceFormat::vertex_csv, {7, 42}};
    export_sequence(seq, req, d.path);
    const std::string csv = read_file(d.path / "vertices.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 8);
    CHECK(csv.starts_with("frame,time,vertex,x,y,z\n0,0.000000,7,"));
    req.tracked_vertices = {100000};
    CHECK_THROWS_AS(export_sequence(seq, req, d.path), ValidationError);

    TempDir blocker("blocker");
    write_file_atomic(blocker.path.string() + "_file", "x");
    CHECK_THROWS_AS(export_sequence(seq, {}, blocker.path.string() + "_file"), IoError);
    fs::remove(blocker.path.string() + "_file");
    CHECK(sequence_format_from_string("vertex-csv") == SequenceFormat::vertex_csv);
    CHECK_THROWS_AS(sequence_format_from_string("fbx"), ValidationError);
}
