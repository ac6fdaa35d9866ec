#pragma once

#include <Eigen/Dense>

namespace chainid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec10 = Eigen::Matrix<double, 10, 1>;
using Vec4 = Eigen::Vector4d;
using Vec2 = Eigen::Vector2d;

}  // namespace chainid
