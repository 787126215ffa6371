#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles/oracle_fd.hpp"
#include "oracles/oracle_gravity.hpp"
#include "talos/gravity.hpp"
#include "talos/orbit_dynamics.hpp"

using namespace talos;
using Catch::Approx;

namespace {

Vec3 random_radius(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dir(-1.0, 1.0), rad(6600.0, 45000.0);
    Vec3 v;
    do {
        v = Vec3(dir(rng), dir(rng), dir(rng));
    } while (v.norm() < 1e-3);
    return v.normalized() * rad(rng);
}

} // namespace

TEST_CASE("point-mass reduction when the zonal coefficients vanish") {
    PhysicalConstants k = standard_earth_constants();
    k.J2 = k.J3 = k.J4 = 0.0;
    const Vec3 a = zonal_gravity_accel(Vec3(7000, 0, 0), k);
    CHECK(a.x() == Approx(-k.mu / (7000.0 * 7000.0)).epsilon(1e-15));
    CHECK(a.y() == 0.0);
    CHECK(a.z() == 0.0);
}

TEST_CASE("gravity matches the independent transcription at random radii") {
    const PhysicalConstants k = standard_earth_constants();
    const oracle::GravityConstants gc{k.mu, k.Re, k.J2, k.J3, k.J4};
    std::mt19937_64 rng(101);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 r = random_radius(rng);
        const Vec3 got = zonal_gravity_accel(r, k);
        const Eigen::Vector3d want = oracle::zonal_accel(r, gc);
        CHECK((got - want).norm() <= 1e-14 * want.norm());
    }
}

TEST_CASE("north-south symmetry is broken only by J3") {
    // Term audit via the oracle: the point-mass/J2/J4 field is even in z for
    // the in-plane components and odd for the z component; the J3 term has
    // the opposite parity.
    PhysicalConstants k = standard_earth_constants();
    PhysicalConstants k0 = k;
    k0.J3 = 0.0;
    const oracle::GravityConstants gc{k.mu, k.Re, k.J2, k.J3, k.J4};
    const oracle::GravityConstants gc0{k.mu, k.Re, k.J2, 0.0, k.J4};
    std::mt19937_64 rng(202);
    for (int i = 0; i < 50; ++i) {
        const Vec3 r = random_radius(rng);
        const Vec3 m(r.x(), r.y(), -r.z());

        // J3 = 0: exact mirror symmetry, checked against the oracle too.
        const Vec3 b = zonal_gravity_accel(r, k0);
        const Vec3 bm = zonal_gravity_accel(m, k0);
        CHECK(b.x() == Approx(bm.x()).epsilon(1e-12).margin(1e-20));
        CHECK(b.y() == Approx(bm.y()).epsilon(1e-12).margin(1e-20));
        CHECK(b.z() == Approx(-bm.z()).epsilon(1e-12).margin(1e-20));
        CHECK((b - Vec3(oracle::zonal_accel(r, gc0))).norm() <= 1e-14 * b.norm());

        // Full field: the z components are not equal-and-opposite with J3 on.
        const Vec3 a = zonal_gravity_accel(r, k);
        const Vec3 am = zonal_gravity_accel(m, k);
        CHECK(std::abs(a.z() + am.z()) >
              1e-10 * std::max(std::abs(a.z()), std::abs(am.z())));

        // The isolated J3 contribution flips its in-plane part and keeps its
        // z part under the mirror. The margin covers the cancellation noise
        // of differencing two ~1e-4 km/s^2 fields.
        const double noise = 1e-14 * a.cwiseAbs().maxCoeff();
        const Vec3 j3 = a - b;
        const Vec3 j3m = am - bm;
        CHECK(j3.x() == Approx(-j3m.x()).epsilon(1e-6).margin(noise));
        CHECK(j3.y() == Approx(-j3m.y()).epsilon(1e-6).margin(noise));
        CHECK(j3.z() == Approx(j3m.z()).epsilon(1e-6).margin(noise));
        (void)gc;
        (void)gc0;
    }
}

TEST_CASE("equatorial z-acceleration is zero iff J3 is zero") {
    PhysicalConstants k = standard_earth_constants();
    const Vec3 r(8000.0, -2000.0, 0.0);
    CHECK(std::abs(zonal_gravity_accel(r, k).z()) > 0.0);
    k.J3 = 0.0;
    CHECK(zonal_gravity_accel(r, k).z() == 0.0);
}

TEST_CASE("guard radius rejects sub-surface states") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK_THROWS_AS(zonal_gravity_accel(Vec3(1000, 0, 0), k), GuardRadiusError);
    CHECK_THROWS_AS(zonal_gravity_jacobian(Vec3(0.1, 0.1, 0.1), k), GuardRadiusError);
}

TEST_CASE("point-mass jacobian is the classic tidal tensor") {
    PhysicalConstants k = standard_earth_constants();
    k.J2 = k.J3 = k.J4 = 0.0;
    const double R = 9000.0;
    const Mat3 j = zonal_gravity_jacobian(Vec3(R, 0, 0), k);
    const double muR3 = k.mu / (R * R * R);
    CHECK(j(0, 0) == Approx(2.0 * muR3).epsilon(1e-13));
    CHECK(j(1, 1) == Approx(-muR3).epsilon(1e-13));
    CHECK(j(2, 2) == Approx(-muR3).epsilon(1e-13));
    CHECK((j - j.transpose()).norm() < 1e-18);
    CHECK(std::abs(j.trace()) < 1e-12 * j.norm());
}

TEST_CASE("gravity jacobian matches central differences") {
    const PhysicalConstants k = standard_earth_constants();
    std::mt19937_64 rng(303);
    for (int i = 0; i < 100; ++i) {
        const Vec3 r = random_radius(rng);
        const Mat3 analytic = zonal_gravity_jacobian(r, k);
        const auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return zonal_gravity_accel(Vec3(x), k);
        };
        const Eigen::MatrixXd fd = oracle::fd_jacobian_uniform(f, r, 1e-7 * r.norm());
        CHECK((analytic - fd).norm() <= 1e-6 * fd.norm());
    }
}

TEST_CASE("absolute system: circular point-mass orbit keeps its radius") {
    PhysicalConstants k = standard_earth_constants();
    k.J2 = k.J3 = k.J4 = 0.0;
    const StateVec6 x0 = circular_orbit_state(k, 7000.0, 0.3);
    const OdeSystem sys = make_absolute_system(k, 1.3, 47.0);
    const double period = orbital_period(k, x0);
    const TimeGrid grid(0.0, period / 600.0, 600);
    const auto traj = rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(600, 3), grid);
    for (int i = 0; i <= 600; i += 25)
        CHECK(traj.states.row(i).head<3>().norm() == Approx(7000.0).epsilon(1e-9));
}

TEST_CASE("absolute system: one-step thrust changes velocity by about T dt / (1000 m)") {
    const PhysicalConstants k = standard_earth_constants();
    const double mass = 1.3;
    const OdeSystem sys = make_absolute_system(k, mass, 47.0);
    const StateVec6 x0 = circular_orbit_state(k, 6978.0, 0.0);
    const TimeGrid grid(0.0, 0.5, 1);
    Eigen::MatrixXd thrust = Eigen::MatrixXd::Zero(1, 3);
    thrust(0, 0) = 0.04;  // N
    const auto with = rk4_propagate(sys, x0, thrust, grid);
    const auto without = rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(1, 3), grid);
    const Vec3 dv = with.states.row(1).tail<3>() - without.states.row(1).tail<3>();
    CHECK(dv.x() == Approx(0.04 * 0.5 / (1000.0 * mass)).epsilon(1e-6));
}

TEST_CASE("absolute system jacobians are finite-difference consistent") {
    const PhysicalConstants k = standard_earth_constants();
    const OdeSystem sys = make_absolute_system(k, 2.0, 47.0);
    std::mt19937_64 rng(404);
    std::normal_distribution<double> dist;
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x(6);
        x.head<3>() = random_radius(rng);
        x.tail<3>() = Vec3(dist(rng), dist(rng), dist(rng));
        Eigen::VectorXd u = Eigen::Vector3d(dist(rng), dist(rng), dist(rng)) * 0.01;
        const auto fx = [&](const Eigen::VectorXd& xx) { return sys.rhs(0.0, xx, u); };
        const auto fu = [&](const Eigen::VectorXd& uu) { return sys.rhs(0.0, x, uu); };
        CHECK((oracle::fd_jacobian(fx, x) - sys.jac_x(0.0, x, u)).norm() <=
              1e-6 * (1.0 + sys.jac_x(0.0, x, u).norm()));
        CHECK((oracle::fd_jacobian(fu, u) - sys.jac_u(0.0, x, u)).norm() <=
              1e-6 * (1.0 + sys.jac_u(0.0, x, u).norm()));
    }
}

TEST_CASE("make_absolute_system rejects nonpositive mass") {
    const PhysicalConstants k = standard_earth_constants();
    CHECK_THROWS_AS(make_absolute_system(k, 0.0, 47.0), std::invalid_argument);
    CHECK_THROWS_AS(make_absolute_system(k, -1.0, 47.0), std::invalid_argument);
}

TEST_CASE("sun-synchronous-like orbit shows the J2 nodal precession over 30 orbits") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 x0 = default_reference_orbit_state(k);
    const OdeSystem sys = make_absolute_system(k, 1.3, 47.0);
    const double period = orbital_period(k, x0);
    const double dt = 30.0;
    const auto n = static_cast<std::int64_t>(std::llround(30.0 * period / dt));
    const auto traj = rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(n, 3), TimeGrid(0.0, dt, n));

    // Bounded trajectory.
    for (std::int64_t i = 0; i <= n; i += 50) {
        const double r = traj.states.row(i).head<3>().norm();
        CHECK(r > 6800.0);
        CHECK(r < 7200.0);
    }

    // RAAN drift from the orbit-normal direction, against the secular
    // J2 rate as oracle.
    const auto raan = [&](std::int64_t i) {
        const Vec3 r = traj.states.row(i).head<3>();
        const Vec3 v = traj.states.row(i).tail<3>();
        const Vec3 h = r.cross(v);
        return std::atan2(h.x(), -h.y());
    };
    const double a_km = x0.head<3>().norm();
    const double inc = 97.8 * kPi / 180.0;
    const double expected_rate = oracle::j2_nodal_rate(k.mu, k.Re, k.J2, a_km, inc);

    const double t_span = static_cast<double>(n) * dt;
    double drift = raan(n) - raan(0);
    while (drift > kPi) drift -= 2.0 * kPi;
    while (drift < -kPi) drift += 2.0 * kPi;
    const double measured_rate = drift / t_span;
    CHECK(measured_rate == Approx(expected_rate).epsilon(0.05));
    CHECK(expected_rate > 0.0);  // retrograde orbit precesses eastward

    // Monotonic drift, sampled once per orbit.
    const auto steps_per_orbit = static_cast<std::int64_t>(period / dt);
    double prev = raan(0);
    for (std::int64_t orbit = 1; orbit <= 29; ++orbit) {
        double cur = raan(orbit * steps_per_orbit);
        double d = cur - prev;
        while (d > kPi) d -= 2.0 * kPi;
        while (d < -kPi) d += 2.0 * kPi;
        CHECK(d > 0.0);
        prev = cur;
    }
}

TEST_CASE("reference orbit: degenerate grid, determinism, cache round trip") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 x0 = default_reference_orbit_state(k);

    SECTION("n = 0 grid yields a single sample equal to the initial state") {
        const ReferenceOrbit ref = precompute_reference(k, x0, TimeGrid(0.0, 10.0, 0));
        REQUIRE(ref.states.rows() == 1);
        CHECK((ref.states.row(0).transpose() - x0).norm() == 0.0);
    }

    SECTION("samples match a fresh uncached propagation exactly") {
        const TimeGrid grid(0.0, 10.0, 200);
        const ReferenceOrbit ref = precompute_reference(k, x0, grid);
        const OdeSystem sys = make_absolute_system(k, 1.0, 1.0);
        const auto direct = rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(ref.grid.n, 3), ref.grid);
        CHECK(ref.states == direct.states);
        CHECK(ref.grid.dt == 5.0);  // stored at half steps
        CHECK(ref.grid.n == 400);
    }

    SECTION("second call is a cache hit with bitwise identical samples") {
        const auto dir = std::filesystem::temp_directory_path() /
                         ("talos_cache_test_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir);
        const TimeGrid grid(0.0, 20.0, 100);
        const ReferenceOrbit first = precompute_reference(k, x0, grid, dir.string());
        REQUIRE(std::filesystem::exists(dir));
        const ReferenceOrbit second = precompute_reference(k, x0, grid, dir.string());
        CHECK(first.states == second.states);
        CHECK(first.provenance == second.provenance);

        // A corrupt cache entry falls back to recomputation.
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            std::ofstream trunc(entry.path(), std::ios::trunc);
        }
        const ReferenceOrbit third = precompute_reference(k, x0, grid, dir.string());
        CHECK(third.states == first.states);
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("relative system: zero offset stays at zero on an aligned grid") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 x0 = default_reference_orbit_state(k);
    const TimeGrid grid(0.0, 10.0, 500);
    const ReferenceOrbit ref = precompute_reference(k, x0, grid);
    const OdeSystem sys = make_relative_system(ref, k, 1.3, 47.0);
    const auto traj =
        rk4_propagate(sys, StateVec6::Zero(), Eigen::MatrixXd::Zero(500, 3), grid);
    for (int i = 0; i <= 500; i += 20)
        CHECK(traj.states.row(i).head<3>().norm() < 1e-12);
}

TEST_CASE("relative propagation equals differenced absolute propagations") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 ref_state = default_reference_orbit_state(k);
    const double period = orbital_period(k, ref_state);
    const double dt = 20.0;
    const auto n = static_cast<std::int64_t>(std::llround(3.0 * period / dt));
    const TimeGrid grid(0.0, dt, n);
    const ReferenceOrbit ref = precompute_reference(k, ref_state, grid);

    const OdeSystem abs_sys = make_absolute_system(k, 1.3, 47.0);
    const OdeSystem rel_sys = make_relative_system(ref, k, 1.3, 47.0);
    const Eigen::MatrixXd no_thrust = Eigen::MatrixXd::Zero(n, 3);
    const auto ref_abs = rk4_propagate(abs_sys, ref_state, no_thrust, grid);

    for (const double offset : {0.02, -0.02}) {  // +-20 m in x
        StateVec6 u0 = StateVec6::Zero();
        u0[0] = offset;
        const auto rel = rk4_propagate(rel_sys, u0, no_thrust, grid);
        const auto abs = rk4_propagate(abs_sys, StateVec6(ref_state + u0), no_thrust, grid);
        double worst = 0.0;
        for (std::int64_t i = 0; i <= n; ++i) {
            const Vec3 diff = abs.states.row(i).head<3>() - ref_abs.states.row(i).head<3>();
            worst = std::max(worst, (Vec3(rel.states.row(i).head<3>()) - diff).norm());
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("mirrored offsets give equal-and-opposite relative accelerations at t = 0") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 ref_state = default_reference_orbit_state(k);
    const TimeGrid grid(0.0, 10.0, 10);
    const ReferenceOrbit ref = precompute_reference(k, ref_state, grid);
    const OdeSystem rel_sys = make_relative_system(ref, k, 1.3, 47.0);

    const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(3);
    const auto accel_pair_residual = [&](double offset_km) {
        StateVec6 up = StateVec6::Zero(), um = StateVec6::Zero();
        up[0] = offset_km;
        um[0] = -offset_km;
        const Vec3 ap = rel_sys.rhs(0.0, up, zero_u).tail<3>();
        const Vec3 am = rel_sys.rhs(0.0, um, zero_u).tail<3>();
        return std::make_pair((ap + am).norm(), ap.norm());
    };

    // Equal and opposite to first order: the symmetric residual is
    // O(|u|^2) and shrinks 4x when the offset halves.
    const auto [res20, mag20] = accel_pair_residual(0.02);
    CHECK(res20 < 1e-4 * mag20);
    const auto [res10, mag10] = accel_pair_residual(0.01);
    (void)mag10;
    CHECK(res20 / res10 == Approx(4.0).margin(0.5));
}

TEST_CASE("relative propagation past the reference coverage fails") {
    const PhysicalConstants k = standard_earth_constants();
    const StateVec6 ref_state = default_reference_orbit_state(k);
    const ReferenceOrbit ref = precompute_reference(k, ref_state, TimeGrid(0.0, 10.0, 50));
    const OdeSystem rel_sys = make_relative_system(ref, k, 1.3, 47.0);
    const TimeGrid longer(0.0, 10.0, 60);
    CHECK_THROWS_AS(
        rk4_propagate(rel_sys, StateVec6::Zero(), Eigen::MatrixXd::Zero(60, 3), longer),
        std::out_of_range);
}
