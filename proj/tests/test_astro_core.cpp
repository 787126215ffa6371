#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <random>

#include "talos/constants.hpp"
#include "talos/frames.hpp"
#include "talos/types.hpp"

using namespace talos;
using Catch::Approx;

TEST_CASE("standard earth constants match the reference table") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK(k.mu == 3.986004418e5);
    CHECK(k.Re == 6378.137);
    CHECK(k.J2 == 1.08262668e-3);
    CHECK(k.J3 == -2.53265648e-6);
    CHECK(k.J4 == -1.61962159e-6);
    CHECK(k.g0 == 9.80665);
    CHECK(k.c == 299792458.0);
    CHECK(k.k_B == 1.380649e-23);
    CHECK(k.omega_E == 7.2921159e-5);
}

TEST_CASE("constants sign conventions") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK(k.J2 > 0.0);
    CHECK(k.J3 < 0.0);
    CHECK(k.J4 < 0.0);
    CHECK(k.mu > 0.0);
    CHECK(k.omega_E > 0.0);
}

TEST_CASE("two constant calls are bitwise identical") {
    const PhysicalConstants a = standard_earth_constants();
    const PhysicalConstants b = standard_earth_constants();
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("gmst rotation basics") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK((gmst_rotation(0.0, k) - Mat3::Identity()).norm() == Approx(0.0).margin(1e-15));

    const double day = 2.0 * kPi / k.omega_E;
    CHECK((gmst_rotation(day, k) - Mat3::Identity()).norm() < 1e-9);

    const Vec3 flipped = gmst_rotation(0.5 * day, k) * Vec3(1, 0, 0);
    CHECK((flipped - Vec3(-1, 0, 0)).norm() < 1e-9);
}

TEST_CASE("gmst rotation is orthonormal with unit determinant") {
    const PhysicalConstants k = standard_earth_constants();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ts(-1e6, 1e6);
    for (int i = 0; i < 100; ++i) {
        const Mat3 r = gmst_rotation(ts(rng), k);
        CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
        CHECK(r.determinant() == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("geodetic placement at the equator and pole") {
    const PhysicalConstants k = standard_earth_constants();
    const Vec3 equator = geodetic_to_eci(0.0, 0.0, 0.0, 0.0, k);
    CHECK((equator - Vec3(k.Re, 0, 0)).norm() < 1e-9);

    for (double t : {0.0, 1234.5, 86400.0}) {
        const Vec3 pole = geodetic_to_eci(0.0, 90.0, 0.0, t, k);
        CHECK((pole - Vec3(0, 0, k.Re)).norm() < 1e-9);
    }
}

TEST_CASE("san diego station radius and direction") {
    const PhysicalConstants k = standard_earth_constants();
    const double lon = -117.2340, lat = 32.8801, alt = 0.4849;
    const Vec3 p = geodetic_to_eci(lon, lat, alt, 0.0, k);
    CHECK(p.norm() == Approx(k.Re + alt).epsilon(1e-12));

    // Independent spherical-coordinate computation (epoch: ECI = ECEF).
    const double rho = k.Re + alt;
    const Vec3 expected(rho * std::cos(deg2rad(lat)) * std::cos(deg2rad(lon)),
                        rho * std::cos(deg2rad(lat)) * std::sin(deg2rad(lon)),
                        rho * std::sin(deg2rad(lat)));
    CHECK((p - expected).norm() < 1e-9);
}

TEST_CASE("geodetic radius invariant at random inputs") {
    const PhysicalConstants k = standard_earth_constants();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lons(-180, 180), lats(-90, 90), alts(0, 2000),
        ts(0, 1e5);
    for (int i = 0; i < 200; ++i) {
        const double alt = alts(rng);
        const Vec3 p = geodetic_to_eci(lons(rng), lats(rng), alt, ts(rng), k);
        CHECK(std::abs(p.norm() - (k.Re + alt)) < 1e-9);
    }
}

TEST_CASE("geodetic input validation") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK_THROWS_AS(geodetic_to_eci(0, 95, 0, 0, k), std::invalid_argument);
    CHECK_THROWS_AS(geodetic_to_eci(190, 0, 0, 0, k), std::invalid_argument);
    CHECK_THROWS_AS(geodetic_to_eci(0, 0, -1, 0, k), std::invalid_argument);
}
