#ifndef TALOS_CONSTANTS_HPP
#define TALOS_CONSTANTS_HPP

namespace talos {

// Physical constants shared by every discipline. Positions are kilometers,
// velocities km/s, thrust newtons, mass kilograms throughout the toolkit.
struct PhysicalConstants {
    double mu;       // gravitational parameter [km^3/s^2]
    double Re;       // Earth equatorial radius [km]
    double J2;       // zonal harmonics [-]
    double J3;
    double J4;
    double g0;       // standard gravity [m/s^2]
    double c;        // speed of light [m/s]
    double k_B;      // Boltzmann constant [J/K]
    double omega_E;  // Earth rotation rate [rad/s]
};

// Standard geodetic reference values (EGM/WGS84, SI defined constants).
inline PhysicalConstants standard_earth_constants() {
    PhysicalConstants k{};
    k.mu = 3.986004418e5;
    k.Re = 6378.137;
    k.J2 = 1.08262668e-3;
    k.J3 = -2.53265648e-6;
    k.J4 = -1.61962159e-6;
    k.g0 = 9.80665;
    k.c = 299792458.0;
    k.k_B = 1.380649e-23;
    k.omega_E = 7.2921159e-5;
    return k;
}

} // namespace talos

#endif // TALOS_CONSTANTS_HPP
