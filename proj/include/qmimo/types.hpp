#pragma once

#include <complex>
#include <Eigen/Dense>

namespace qmimo {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

// Exact vacuum value; scenes may override (SceneConfig::c).
inline constexpr double kSpeedOfLight = 299792458.0;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Library version, echoed into run manifests.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace qmimo
