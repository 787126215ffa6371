#ifndef TALOS_ATTITUDE_HPP
#define TALOS_ATTITUDE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "talos/ode.hpp"
#include "talos/types.hpp"

namespace talos {

// Body angular velocity plus the first and third rows of the rotation
// matrix taking radial-tangential-normal coordinates to body coordinates.
// The middle row is reconstructed as C2 = C3 x C1 wherever it is needed.
struct AttitudeState {
    Vec3 omega{0.0, 0.0, 0.0};   // body rates [rad/s]
    Vec3 C3{0.0, 0.0, 1.0};      // (C31, C32, C33)
    Vec3 C1{1.0, 0.0, 0.0};      // (C11, C12, C13)

    void validate(double tol = 1e-6) const {
        if (std::abs(C1.norm() - 1.0) > tol || std::abs(C3.norm() - 1.0) > tol ||
            std::abs(C1.dot(C3)) > tol)
            throw std::invalid_argument("AttitudeState: C1/C3 rows must be orthonormal");
    }

    Eigen::VectorXd to_vector() const {
        Eigen::VectorXd x(9);
        x << omega, C3, C1;
        return x;
    }

    static AttitudeState from_vector(const Eigen::VectorXd& x) {
        if (x.size() != 9) throw std::invalid_argument("AttitudeState: expected 9 components");
        AttitudeState s;
        s.omega = x.segment<3>(0);
        s.C3 = x.segment<3>(3);
        s.C1 = x.segment<3>(6);
        return s;
    }
};

// Gravity-gradient dynamics of an unsymmetric rigid body in circular orbit.
// K follows the cyclic convention K_x = (I_y - I_z) / I_x etc., which
// vanishes for a symmetric body.
struct AttitudeDynamics {
    Vec3 inertia;        // principal moments (I1, I2, I3) [kg m^2]
    double orbit_rate;   // Omega [rad/s]
    Vec3 K;

    AttitudeDynamics(const Vec3& inertia_, double orbit_rate_)
        : inertia(inertia_), orbit_rate(orbit_rate_) {
        const double i1 = inertia.x(), i2 = inertia.y(), i3 = inertia.z();
        if (!(i1 > 0.0 && i2 > 0.0 && i3 > 0.0))
            throw std::invalid_argument("AttitudeDynamics: moments of inertia must be > 0");
        if (i1 + i2 < i3 || i2 + i3 < i1 || i3 + i1 < i2)
            throw std::invalid_argument("AttitudeDynamics: inertia triangle inequality violated");
        K = Vec3((i2 - i3) / i1, (i3 - i1) / i2, (i1 - i2) / i3);
    }
};

// The nine equations of motion. Torque terms use C2 = C3 x C1; the C1 row
// carries the orbital-rate correction Omega * (C3 x C1).
inline Eigen::VectorXd attitude_rhs(const Eigen::VectorXd& x, const AttitudeDynamics& dyn) {
    if (x.size() != 9) throw std::invalid_argument("attitude_rhs: expected 9 components");
    const double wx = x[0], wy = x[1], wz = x[2];
    const Vec3 w = x.segment<3>(0);
    const Vec3 c3 = x.segment<3>(3);
    const Vec3 c1 = x.segment<3>(6);
    const Vec3 c2 = c3.cross(c1);
    const double O2 = 3.0 * dyn.orbit_rate * dyn.orbit_rate;

    Eigen::VectorXd dx(9);
    dx[0] = dyn.K.x() * (wy * wz - O2 * c2.x() * c3.x());
    dx[1] = dyn.K.y() * (wz * wx - O2 * c3.x() * c1.x());
    dx[2] = dyn.K.z() * (wx * wy - O2 * c1.x() * c2.x());
    dx.segment<3>(3) = c3.cross(w);
    dx.segment<3>(6) = c1.cross(w) + dyn.orbit_rate * c2;
    return dx;
}

inline Eigen::VectorXd attitude_rhs(const AttitudeState& s, const AttitudeDynamics& dyn) {
    return attitude_rhs(s.to_vector(), dyn);
}

inline Eigen::MatrixXd attitude_jacobian(const Eigen::VectorXd& x, const AttitudeDynamics& dyn) {
    const double wx = x[0], wy = x[1], wz = x[2];
    const Vec3 w = x.segment<3>(0);
    const Vec3 c3 = x.segment<3>(3);
    const Vec3 c1 = x.segment<3>(6);
    const Vec3 c2 = c3.cross(c1);
    const double O2 = 3.0 * dyn.orbit_rate * dyn.orbit_rate;

    // c2 = c3 x c1: d c2 / d c3 = -skew(c1), d c2 / d c1 = skew(c3).
    const Mat3 dc2_dc3 = -skew(c1);
    const Mat3 dc2_dc1 = skew(c3);

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(9, 9);

    // omega-dot rows.
    j(0, 1) = dyn.K.x() * wz;
    j(0, 2) = dyn.K.x() * wy;
    for (int m = 0; m < 3; ++m) {
        j(0, 3 + m) += -dyn.K.x() * O2 * (dc2_dc3(0, m) * c3.x() + c2.x() * (m == 0 ? 1.0 : 0.0));
        j(0, 6 + m) += -dyn.K.x() * O2 * dc2_dc1(0, m) * c3.x();
    }
    j(1, 0) = dyn.K.y() * wz;
    j(1, 2) = dyn.K.y() * wx;
    j(1, 3) += -dyn.K.y() * O2 * c1.x();
    j(1, 6) += -dyn.K.y() * O2 * c3.x();
    j(2, 0) = dyn.K.z() * wy;
    j(2, 1) = dyn.K.z() * wx;
    for (int m = 0; m < 3; ++m) {
        j(2, 3 + m) += -dyn.K.z() * O2 * c1.x() * dc2_dc3(0, m);
        j(2, 6 + m) += -dyn.K.z() * O2 * (c1.x() * dc2_dc1(0, m) + c2.x() * (m == 0 ? 1.0 : 0.0));
    }

    // C3 row: d(c3 x w)/dw = skew(c3), d/dc3 = -skew(w).
    j.block<3, 3>(3, 0) = skew(c3);
    j.block<3, 3>(3, 3) = -skew(w);

    // C1 row: c1 x w + Omega * c2.
    j.block<3, 3>(6, 0) = skew(c1);
    j.block<3, 3>(6, 3) = dyn.orbit_rate * dc2_dc3;
    j.block<3, 3>(6, 6) = -skew(w) + dyn.orbit_rate * dc2_dc1;

    return j;
}

// Attitude as an OdeSystem (n_x = 9, no controls).
inline OdeSystem make_attitude_system(const AttitudeDynamics& dyn) {
    OdeSystem sys;
    sys.n_x = 9;
    sys.n_u = 0;
    sys.rhs = [dyn](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return attitude_rhs(x, dyn);
    };
    sys.jac_x = [dyn](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return attitude_jacobian(x, dyn);
    };
    sys.jac_u = [](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(9, 0).eval();
    };
    return sys;
}

// Angle between the body 3-axis and the orbit-normal axis, from C33.
// The argument is clamped so roundoff just outside [-1, 1] stays finite.
inline double nutation_angle(const AttitudeState& s) {
    return std::acos(std::clamp(s.C3.z(), -1.0, 1.0));
}

inline double nutation_angle(const Eigen::VectorXd& x) {
    return nutation_angle(AttitudeState::from_vector(x));
}

// Max orthonormality defect of the two stored rows.
inline double orthonormality_drift(const AttitudeState& s) {
    return std::max({std::abs(s.C1.norm() - 1.0), std::abs(s.C3.norm() - 1.0),
                     std::abs(s.C1.dot(s.C3))});
}

// The fixed point of the dynamics: body axes aligned with the RTN frame and
// spinning with it, omega = (0, 0, Omega).
inline AttitudeState corotating_equilibrium(double orbit_rate) {
    AttitudeState s;
    s.omega = Vec3(0.0, 0.0, orbit_rate);
    return s;
}

} // namespace talos

#endif // TALOS_ATTITUDE_HPP
