#ifndef TALOS_TYPES_HPP
#define TALOS_TYPES_HPP

#include <Eigen/Dense>

namespace talos {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using StateVec6 = Eigen::Matrix<double, 6, 1>;

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

} // namespace talos

#endif // TALOS_TYPES_HPP
