#pragma once

#include "ema/trackio.hpp"
#include "ema/types.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace ema {

// How the three rotation channels of each root are populated.
enum class RotationMode {
    normals,  // raw orientation normal (nx, ny, nz)
    euler,    // degrees, see normal_to_euler
};

std::string_view to_string(RotationMode mode);
RotationMode rotation_mode_from_string(std::string_view s);

inline const std::array<std::string, 6> kCoilChannels = {"Xposition", "Yposition", "Zposition",
                                                         "Zrotation", "Xrotation", "Yrotation"};

// One coil: a ROOT with six channels and a unit-length End Site.
struct BvhRoot {
    std::string name;
    Vec3 offset = Vec3::Zero();
    std::array<std::string, 6> channels = kCoilChannels;
    Vec3 end_site = Vec3::UnitZ();
};

struct BvhDocument {
    std::vector<BvhRoot> roots;
    std::size_t frame_count = 0;
    double frame_time = kDefaultFramePeriod;  // s
    RotationMode rotation_mode = RotationMode::normals;
    // frame_count rows of 6 * roots.size() values, roots in order.
    std::vector<std::vector<double>> motion;

    std::size_t column_count() const { return 6 * roots.size(); }
};

// Throws ValidationError when an invariant of the document is broken.
void validate(const BvhDocument& doc);

BvhDocument to_bvh(const CoilTrajectorySet& set, RotationMode mode);

// Reverse of to_bvh: timestamps are frame_index * frame_time.
CoilTrajectorySet from_bvh(const BvhDocument& doc);

std::string write_bvh(const BvhDocument& doc);
BvhDocument parse_bvh(std::string_view text);

struct EulerAngles {
    double x = 0.0;  // degrees
    double y = 0.0;
    double z = 0.0;
};

// Angles with Ry(y) * Rx(x) * (0,0,1) = n and z = 0.
EulerAngles normal_to_euler(const Vec3& n);
Vec3 euler_to_normal(const EulerAngles& e);

}  // namespace ema
