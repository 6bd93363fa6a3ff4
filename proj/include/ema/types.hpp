#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace ema {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Positions are millimetres throughout.
using Points = std::vector<Vec3>;

}  // namespace ema
