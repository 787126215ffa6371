#ifndef TALOS_GRAVITY_HPP
#define TALOS_GRAVITY_HPP

#include <cmath>
#include <stdexcept>

#include "talos/constants.hpp"
#include "talos/types.hpp"

namespace talos {

struct GuardRadiusError : std::domain_error {
    GuardRadiusError() : std::domain_error("zonal gravity: |r| below guard radius Re/2") {}
};

namespace detail {
inline void check_guard_radius(const Vec3& r, const PhysicalConstants& k) {
    if (!(r.norm() > 0.5 * k.Re)) throw GuardRadiusError();
}
} // namespace detail

// Point-mass gravity plus the J2, J3 and J4 zonal perturbation terms,
// evaluated term by term. Each zonal bracket has the form
// alpha(n, z) * r + beta(n, z) * zhat with n = |r| and z = r_z; the J3
// zhat coefficient is written with its 1/z factor multiplied through so
// the equatorial plane evaluates cleanly. Input km, output km/s^2.
inline Vec3 zonal_gravity_accel(const Vec3& r, const PhysicalConstants& k) {
    detail::check_guard_radius(r, k);
    const double n2 = r.squaredNorm();
    const double n = std::sqrt(n2);
    const double z = r.z();
    const double z2 = z * z;

    const double p3 = 1.0 / (n2 * n);
    const double p5 = p3 / n2;
    const double p7 = p5 / n2;

    const double c2 = -1.5 * k.mu * k.J2 * k.Re * k.Re;
    const double c3 = -2.5 * k.mu * k.J3 * k.Re * k.Re * k.Re;
    const double c4 = (15.0 / 8.0) * k.mu * k.J4 * k.Re * k.Re * k.Re * k.Re;

    const double alpha = -k.mu * p3
        + c2 * p5 * (1.0 - 5.0 * z2 / n2)
        + c3 * p7 * (3.0 * z - 7.0 * z2 * z / n2)
        + c4 * p7 * (1.0 - 14.0 * z2 / n2 + 21.0 * z2 * z2 / (n2 * n2));
    const double beta = c2 * p5 * 2.0 * z
        + c3 * p7 * (3.0 * z2 - 0.6 * n2)
        + c4 * p7 * (4.0 - 28.0 * z2 / (3.0 * n2)) * z;

    Vec3 a = alpha * r;
    a.z() += beta;
    return a;
}

// d(zonal_gravity_accel)/dr. With a = sum_m alpha_m r + beta_m zhat the
// Jacobian is sum_m alpha_m I + r grad(alpha_m)^T + zhat grad(beta_m)^T,
// with gradients taken through n = |r| and z = r_z. Units 1/s^2.
inline Mat3 zonal_gravity_jacobian(const Vec3& r, const PhysicalConstants& k) {
    detail::check_guard_radius(r, k);
    const double n2 = r.squaredNorm();
    const double n = std::sqrt(n2);
    const double z = r.z();
    const double z2 = z * z;
    const double z3 = z2 * z;
    const double z4 = z2 * z2;

    const double p3 = 1.0 / (n2 * n);
    const double p4 = p3 / n;
    const double p5 = p4 / n;
    const double p6 = p5 / n;
    const double p7 = p6 / n;
    const double p8 = p7 / n;
    const double p9 = p8 / n;
    const double p10 = p9 / n;
    const double p11 = p10 / n;
    const double p12 = p11 / n;

    const double c2 = -1.5 * k.mu * k.J2 * k.Re * k.Re;
    const double c3 = -2.5 * k.mu * k.J3 * k.Re * k.Re * k.Re;
    const double c4 = (15.0 / 8.0) * k.mu * k.J4 * k.Re * k.Re * k.Re * k.Re;

    const double alpha = -k.mu * p3
        + c2 * (p5 - 5.0 * z2 * p7)
        + c3 * (3.0 * z * p7 - 7.0 * z3 * p9)
        + c4 * (p7 - 14.0 * z2 * p9 + 21.0 * z4 * p11);

    const double dalpha_dn = 3.0 * k.mu * p4
        + c2 * (-5.0 * p6 + 35.0 * z2 * p8)
        + c3 * (-21.0 * z * p8 + 63.0 * z3 * p10)
        + c4 * (-7.0 * p8 + 126.0 * z2 * p10 - 231.0 * z4 * p12);

    const double dalpha_dz = c2 * (-10.0 * z * p7)
        + c3 * (3.0 * p7 - 21.0 * z2 * p9)
        + c4 * (-28.0 * z * p9 + 84.0 * z3 * p11);

    const double dbeta_dn = c2 * (-10.0 * z * p6)
        + c3 * (3.0 * p6 - 21.0 * z2 * p8)
        + c4 * (-28.0 * z * p8 + 84.0 * z3 * p10);

    const double dbeta_dz = c2 * 2.0 * p5
        + c3 * 6.0 * z * p7
        + c4 * (4.0 * p7 - 28.0 * z2 * p9);

    const Vec3 zhat(0.0, 0.0, 1.0);
    const Vec3 grad_alpha = (dalpha_dn / n) * r + dalpha_dz * zhat;
    const Vec3 grad_beta = (dbeta_dn / n) * r + dbeta_dz * zhat;

    return alpha * Mat3::Identity() + r * grad_alpha.transpose() + zhat * grad_beta.transpose();
}

} // namespace talos

#endif // TALOS_GRAVITY_HPP
