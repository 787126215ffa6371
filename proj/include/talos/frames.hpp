#ifndef TALOS_FRAMES_HPP
#define TALOS_FRAMES_HPP

#include <cmath>
#include <stdexcept>

#include "talos/constants.hpp"
#include "talos/types.hpp"

namespace talos {

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }
inline double arcsec2rad(double a) { return a * kPi / (180.0 * 3600.0); }

// ECI -> ECEF rotation at t seconds past epoch. The epoch is aligned with
// the prime meridian (theta0 = 0), so t = 0 gives the identity.
inline Mat3 gmst_rotation(double t, double omega_E) {
    if (!std::isfinite(t)) throw std::invalid_argument("gmst_rotation: t must be finite");
    const double th = omega_E * t;
    const double c = std::cos(th), s = std::sin(th);
    Mat3 r;
    r << c, s, 0.0,
        -s, c, 0.0,
         0.0, 0.0, 1.0;
    return r;
}

inline Mat3 gmst_rotation(double t, const PhysicalConstants& k) {
    return gmst_rotation(t, k.omega_E);
}

// Spherical-Earth ground point at radius Re + alt, rotated into ECI by the
// Earth rotation angle at time t. Returns km.
inline Vec3 geodetic_to_eci(double lon_deg, double lat_deg, double alt_km, double t,
                            const PhysicalConstants& k) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
        throw std::invalid_argument("geodetic_to_eci: lat out of [-90, 90]");
    if (!(lon_deg >= -180.0 && lon_deg <= 180.0))
        throw std::invalid_argument("geodetic_to_eci: lon out of [-180, 180]");
    if (!(alt_km >= 0.0))
        throw std::invalid_argument("geodetic_to_eci: alt must be >= 0");
    const double lon = deg2rad(lon_deg), lat = deg2rad(lat_deg);
    const double rho = k.Re + alt_km;
    const Vec3 ecef(rho * std::cos(lat) * std::cos(lon),
                    rho * std::cos(lat) * std::sin(lon),
                    rho * std::sin(lat));
    // ECEF -> ECI is the transpose of the ECI -> ECEF rotation.
    return gmst_rotation(t, k).transpose() * ecef;
}

} // namespace talos

#endif // TALOS_FRAMES_HPP
