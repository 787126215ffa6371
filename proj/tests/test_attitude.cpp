#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles/oracle_attitude.hpp"
#include "oracles/oracle_fd.hpp"
#include "talos/attitude.hpp"
#include "talos/ode.hpp"

using namespace talos;
using Catch::Approx;

namespace {

constexpr double kOrbitRate = 1e-3;  // rad/s

Eigen::VectorXd random_attitude_state(std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    // Random orthonormal C1/C3 pair plus a random rate.
    Vec3 c3(dist(rng), dist(rng), dist(rng));
    c3.normalize();
    Vec3 c1(dist(rng), dist(rng), dist(rng));
    c1 -= c1.dot(c3) * c3;
    c1.normalize();
    AttitudeState s;
    s.omega = Vec3(dist(rng), dist(rng), dist(rng)) * 0.02;
    s.C3 = c3;
    s.C1 = c1;
    return s.to_vector();
}

double propagate_drift(const Vec3& inertia, const Vec3& omega0, double dt, double orbits,
                       double* ratio_probe_dt_half = nullptr) {
    const AttitudeDynamics dyn(inertia, kOrbitRate);
    const OdeSystem sys = make_attitude_system(dyn);
    AttitudeState s0;
    s0.omega = omega0;
    const double horizon = orbits * 2.0 * kPi / kOrbitRate;

    const auto drift_for = [&](double step) {
        const auto n = static_cast<std::int64_t>(std::llround(horizon / step));
        const auto traj = rk4_propagate(sys, s0.to_vector(), Eigen::MatrixXd::Zero(n, 0),
                                        TimeGrid(0.0, step, n));
        double worst = 0.0;
        for (std::int64_t i = 0; i <= n; ++i)
            worst = std::max(worst,
                             orthonormality_drift(AttitudeState::from_vector(traj.states.row(i))));
        return worst;
    };
    const double d = drift_for(dt);
    if (ratio_probe_dt_half) *ratio_probe_dt_half = d / drift_for(0.5 * dt);
    return d;
}

} // namespace

TEST_CASE("dynamics invariants") {
    CHECK_THROWS_AS(AttitudeDynamics(Vec3(-1, 2, 3), kOrbitRate), std::invalid_argument);
    CHECK_THROWS_AS(AttitudeDynamics(Vec3(1, 1, 3), kOrbitRate), std::invalid_argument);
    const AttitudeDynamics dyn(Vec3(1, 2, 3), kOrbitRate);
    // (1,2,3) sits on the lamina boundary I1 + I2 = I3, where |K| reaches 1.
    CHECK(dyn.K.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(dyn.K.x() == Approx((2.0 - 3.0) / 1.0));
    CHECK(dyn.K.y() == Approx((3.0 - 1.0) / 2.0));
    CHECK(dyn.K.z() == Approx((1.0 - 2.0) / 3.0));
    // Strictly interior bodies have |K| < 1.
    const AttitudeDynamics interior(Vec3(1.7, 2.4, 3.1), kOrbitRate);
    CHECK(interior.K.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("rhs at the identity attitude with zero body rate") {
    const AttitudeDynamics dyn(Vec3(1, 2, 3), kOrbitRate);
    const AttitudeState s;  // omega = 0, C = identity
    const Eigen::VectorXd dx = attitude_rhs(s, dyn);
    // Torque terms vanish (C21 C31 = C31 C11 = C11 C21 = 0 at identity).
    CHECK(dx.segment<3>(0).norm() == 0.0);
    // C3 row stays put; C1 row turns at the orbital rate.
    CHECK(dx.segment<3>(3).norm() == 0.0);
    CHECK((dx.segment<3>(6) - Vec3(0.0, kOrbitRate, 0.0)).norm() == 0.0);
}

TEST_CASE("symmetric body has identically zero angular acceleration") {
    const AttitudeDynamics dyn(Vec3(2.5, 2.5, 2.5), kOrbitRate);
    CHECK(dyn.K.norm() == 0.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd x = random_attitude_state(rng);
        CHECK(attitude_rhs(x, dyn).segment<3>(0).norm() == 0.0);
    }

    // Propagation keeps omega bitwise constant.
    const OdeSystem sys = make_attitude_system(dyn);
    AttitudeState s0;
    s0.omega = Vec3(0.004, -0.002, 0.007);
    const TimeGrid grid(0.0, 2.0, 2000);
    const auto traj = rk4_propagate(sys, s0.to_vector(), Eigen::MatrixXd::Zero(2000, 0), grid);
    for (int i = 0; i <= 2000; i += 100) {
        CHECK(traj.states(i, 0) == s0.omega.x());
        CHECK(traj.states(i, 1) == s0.omega.y());
        CHECK(traj.states(i, 2) == s0.omega.z());
    }
}

TEST_CASE("rhs matches the independent transcription") {
    const AttitudeDynamics dyn(Vec3(1, 2, 3), kOrbitRate);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd x = random_attitude_state(rng);
        const Eigen::VectorXd got = attitude_rhs(x, dyn);
        const Eigen::VectorXd want = oracle::attitude_rhs(x, 1.0, 2.0, 3.0, kOrbitRate);
        CHECK((got - want).norm() <= 1e-14 * want.norm());
    }
}

TEST_CASE("attitude jacobian matches central differences") {
    const AttitudeDynamics dyn(Vec3(1.7, 2.4, 3.1), kOrbitRate);
    const OdeSystem sys = make_attitude_system(dyn);
    std::mt19937_64 rng(11);
    const Eigen::VectorXd u0(0);
    for (int i = 0; i < 30; ++i) {
        const Eigen::VectorXd x = random_attitude_state(rng);
        const auto f = [&](const Eigen::VectorXd& xx) { return sys.rhs(0.0, xx, u0); };
        const Eigen::MatrixXd fd = oracle::fd_jacobian(f, x, 1e-6);
        const Eigen::MatrixXd an = sys.jac_x(0.0, x, u0);
        CHECK((an - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }
}

TEST_CASE("corotating equilibrium is a fixed point over one orbit") {
    const AttitudeDynamics dyn(Vec3(2.6, 1.6, 2.0), kOrbitRate);
    const OdeSystem sys = make_attitude_system(dyn);
    const Eigen::VectorXd x0 = corotating_equilibrium(kOrbitRate).to_vector();
    CHECK(attitude_rhs(x0, dyn).norm() == 0.0);

    const double period = 2.0 * kPi / kOrbitRate;
    const double dt = 1.0;
    const auto n = static_cast<std::int64_t>(std::llround(period / dt));
    const auto traj =
        rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(n, 0), TimeGrid(0.0, dt, n));
    CHECK((traj.states.row(n).transpose() - x0).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("zero-rate identity state follows pure orbital-rate kinematics (symmetric body)") {
    const AttitudeDynamics dyn(Vec3(2, 2, 2), kOrbitRate);
    const OdeSystem sys = make_attitude_system(dyn);
    const AttitudeState s0;  // omega = 0, C = identity
    const double period = 2.0 * kPi / kOrbitRate;
    const auto n = static_cast<std::int64_t>(std::llround(period / 1.0));
    const auto traj =
        rk4_propagate(sys, s0.to_vector(), Eigen::MatrixXd::Zero(n, 0), TimeGrid(0.0, 1.0, n));
    // Analytic solution: omega stays 0, C3 stays (0,0,1), C1 turns at Omega.
    for (std::int64_t i = 0; i <= n; i += 500) {
        const double th = kOrbitRate * static_cast<double>(i);
        const AttitudeState s = AttitudeState::from_vector(traj.states.row(i));
        CHECK(s.omega.norm() < 1e-12);
        CHECK((s.C3 - Vec3(0, 0, 1)).norm() < 1e-9);
        CHECK((s.C1 - Vec3(std::cos(th), std::sin(th), 0)).norm() < 1e-9);
    }
}

TEST_CASE("small perturbations about the equilibrium stay bounded") {
    // Radial axis largest, tangential smallest: gravity-gradient stable.
    const AttitudeDynamics dyn(Vec3(2.6, 1.6, 2.0), kOrbitRate);

    // Oracle: the linearization at the equilibrium has a purely imaginary
    // spectrum for this inertia ordering.
    const Eigen::VectorXd xeq = corotating_equilibrium(kOrbitRate).to_vector();
    const Eigen::MatrixXd jac = attitude_jacobian(xeq, dyn);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(jac);
    const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(eig.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-12 * max_abs);

    // Nonlinear propagation over 10 orbits. The perturbation is a small
    // rigid rotation plus a rate tweak; deviations are measured on the
    // angle scale (rates divided by the orbit rate). Bounded oscillation:
    // no growth between the first and second half of the horizon.
    const OdeSystem sys = make_attitude_system(dyn);
    const double angle = 1e-4;
    const Mat3 rot = Eigen::AngleAxisd(angle, Vec3(1, 1, 1).normalized()).toRotationMatrix();
    AttitudeState s0;
    s0.C3 = rot * Vec3(0, 0, 1);
    s0.C1 = rot * Vec3(1, 0, 0);
    s0.omega = Vec3(0.3 * kOrbitRate * angle, -0.2 * kOrbitRate * angle,
                    kOrbitRate * (1.0 + 0.4 * angle));

    const double horizon = 10.0 * 2.0 * kPi / kOrbitRate;
    const double dt = 5.0;
    const auto n = static_cast<std::int64_t>(std::llround(horizon / dt));
    const auto traj =
        rk4_propagate(sys, s0.to_vector(), Eigen::MatrixXd::Zero(n, 0), TimeGrid(0.0, dt, n));

    double first_half = 0.0, second_half = 0.0;
    for (std::int64_t i = 0; i <= n; ++i) {
        double dev = std::max(
            (traj.states.row(i).segment<3>(3).transpose() - xeq.segment<3>(3)).norm(),
            (traj.states.row(i).segment<3>(6).transpose() - xeq.segment<3>(6)).norm());
        dev = std::max(dev, (traj.states.row(i).segment<3>(0).transpose() - xeq.segment<3>(0))
                                    .norm() / kOrbitRate);
        (i < n / 2 ? first_half : second_half) = std::max(i < n / 2 ? first_half : second_half,
                                                          dev);
    }
    CHECK(std::max(first_half, second_half) < 3.0 * angle);
    CHECK(second_half < 2.0 * first_half);
}

TEST_CASE("orthonormality drift stays small and shrinks at the integration order") {
    double ratio = 0.0;
    const double drift =
        propagate_drift(Vec3(1, 2, 3), Vec3(0.015, 0.02, 0.01), 1.0, 10.0, &ratio);
    CHECK(drift < 1e-6);
    CHECK(drift > 1e-9);  // truncation-dominated, not roundoff
    // Quadratic-invariant defects of RK4 contract at least at the method
    // order when dt halves (measured ~32x here, 16x is the floor).
    CHECK(ratio > 12.0);
    CHECK(ratio < 40.0);
}

TEST_CASE("nutation angle") {
    AttitudeState s;  // identity
    CHECK(nutation_angle(s) == 0.0);

    s.C3 = Vec3(1, 0, 0);  // body 3-axis in the orbit plane
    s.C1 = Vec3(0, 1, 0);
    CHECK(nutation_angle(s) == Approx(0.5 * kPi));

    s.C3 = Vec3(0, 0, 1.0 + 1e-12);  // roundoff just past 1: clamped, not NaN
    CHECK(nutation_angle(s) == 0.0);
}

TEST_CASE("attitude state validation") {
    AttitudeState s;
    CHECK_NOTHROW(s.validate());
    s.C1 = Vec3(1, 1, 0);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.C1 = Vec3(0, 0, 1);  // parallel to C3
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
