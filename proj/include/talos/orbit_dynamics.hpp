#ifndef TALOS_ORBIT_DYNAMICS_HPP
#define TALOS_ORBIT_DYNAMICS_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unistd.h>

#include "talos/constants.hpp"
#include "talos/detail/sha256.hpp"
#include "talos/gravity.hpp"
#include "talos/ode.hpp"
#include "talos/time_grid.hpp"
#include "talos/types.hpp"

namespace talos {

// Thrust in newtons on a mass in kilograms, positions in km: the
// acceleration contribution is T / (1000 m) km/s^2. Mass is held constant
// during propagation (propellant mass is tracked only by the objective).
inline double thrust_accel_scale(double mass_kg) { return 1.0 / (1000.0 * mass_kg); }

// Absolute orbital dynamics x = (r, v), u = thrust [N], n_x = 6, n_u = 3.
inline OdeSystem make_absolute_system(const PhysicalConstants& k, double mass_kg,
                                      double isp_s) {
    if (!(mass_kg > 0.0)) throw std::invalid_argument("make_absolute_system: mass must be > 0");
    (void)isp_s;  // mass flow enters the optimizer objective, not the dynamics
    const double ts = thrust_accel_scale(mass_kg);

    OdeSystem sys;
    sys.n_x = 6;
    sys.n_u = 3;
    sys.rhs = [k, ts](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        const Vec3 r = x.head<3>();
        Eigen::VectorXd dx(6);
        dx.head<3>() = x.tail<3>();
        dx.tail<3>() = zonal_gravity_accel(r, k) + ts * u;
        return dx;
    };
    sys.jac_x = [k](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 6);
        j.block<3, 3>(0, 3) = Mat3::Identity();
        j.block<3, 3>(3, 0) = zonal_gravity_jacobian(x.head<3>(), k);
        return j;
    };
    sys.jac_u = [ts](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 3);
        j.block<3, 3>(3, 0) = ts * Mat3::Identity();
        return j;
    };
    return sys;
}

// A zero-thrust trajectory of the absolute dynamics, sampled densely enough
// that RK4 stage times of any propagation on the generating grid land on
// stored samples (the storage grid halves dt). Cached to disk keyed by a
// hash of (constants, initial state, generating grid).
struct ReferenceOrbit {
    TimeGrid grid;               // storage grid (dt = generating dt / 2)
    Eigen::MatrixXd states;      // (grid.n + 1) x 6
    std::array<std::uint8_t, 32> provenance{};

    bool covers(double t) const {
        const double s = (t - grid.t0) / grid.dt;
        return s >= -1e-9 && s <= static_cast<double>(grid.n) + 1e-9;
    }

    // Exact row lookup when t is aligned with a stored sample, linear
    // interpolation between neighbours otherwise.
    StateVec6 state_at(double t) const {
        const double s = (t - grid.t0) / grid.dt;
        if (s < -1e-9 || s > static_cast<double>(grid.n) + 1e-9)
            throw std::out_of_range("ReferenceOrbit: t outside reference coverage");
        const double rounded = std::round(s);
        if (std::abs(s - rounded) < 1e-6) {
            const auto i = static_cast<Eigen::Index>(
                std::min(std::max(rounded, 0.0), static_cast<double>(grid.n)));
            return states.row(i);
        }
        const auto i0 = static_cast<Eigen::Index>(std::floor(s));
        const double w = s - static_cast<double>(i0);
        return (1.0 - w) * states.row(i0) + w * states.row(i0 + 1);
    }

    Vec3 position_at(double t) const { return state_at(t).head<3>(); }
};

namespace detail {

constexpr std::uint32_t kReferenceCacheVersion = 1;

inline std::array<std::uint8_t, 32> reference_hash(const PhysicalConstants& k,
                                                   const StateVec6& x0, const TimeGrid& grid) {
    Sha256 h;
    h.update_value(k.mu); h.update_value(k.Re);
    h.update_value(k.J2); h.update_value(k.J3); h.update_value(k.J4);
    h.update_value(k.g0); h.update_value(k.c); h.update_value(k.k_B);
    h.update_value(k.omega_E);
    for (int i = 0; i < 6; ++i) h.update_value(x0[i]);
    h.update_value(grid.t0);
    h.update_value(grid.dt);
    h.update_value(grid.n);
    return h.digest();
}

inline std::optional<ReferenceOrbit> try_load_reference(const std::filesystem::path& file,
                                                        const std::array<std::uint8_t, 32>& hash) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::uint32_t version = 0;
    std::array<std::uint8_t, 32> stored{};
    std::uint64_t n = 0;
    double dt = 0.0, t0 = 0.0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(stored.data()), stored.size());
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&dt), sizeof dt);
    in.read(reinterpret_cast<char*>(&t0), sizeof t0);
    if (!in || version != kReferenceCacheVersion || stored != hash) return std::nullopt;
    ReferenceOrbit ref;
    ref.grid = TimeGrid(t0, dt, static_cast<std::int64_t>(n));
    ref.provenance = hash;
    ref.states.resize(static_cast<Eigen::Index>(n) + 1, 6);
    in.read(reinterpret_cast<char*>(ref.states.data()),
            static_cast<std::streamsize>(sizeof(double) * ref.states.size()));
    if (!in) return std::nullopt;
    return ref;
}

inline void try_store_reference(const std::filesystem::path& file, const ReferenceOrbit& ref) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    const std::filesystem::path tmp = file.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;  // cache write failure is non-fatal
        const std::uint32_t version = kReferenceCacheVersion;
        const auto n = static_cast<std::uint64_t>(ref.grid.n);
        out.write(reinterpret_cast<const char*>(&version), sizeof version);
        out.write(reinterpret_cast<const char*>(ref.provenance.data()), ref.provenance.size());
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(&ref.grid.dt), sizeof ref.grid.dt);
        out.write(reinterpret_cast<const char*>(&ref.grid.t0), sizeof ref.grid.t0);
        out.write(reinterpret_cast<const char*>(ref.states.data()),
                  static_cast<std::streamsize>(sizeof(double) * ref.states.size()));
        if (!out) return;
    }
    std::filesystem::rename(tmp, file, ec);
    if (ec) std::filesystem::remove(tmp, ec);
}

} // namespace detail

// Propagate the zero-thrust absolute dynamics from initial_state over `grid`
// and store the result at half-step resolution. `cache_dir` may be empty to
// skip the on-disk cache; cache I/O failures fall back to recomputation.
inline ReferenceOrbit precompute_reference(const PhysicalConstants& k, const StateVec6& initial_state,
                                           const TimeGrid& grid, const std::string& cache_dir = {}) {
    const auto hash = detail::reference_hash(k, initial_state, grid);
    std::filesystem::path file;
    if (!cache_dir.empty()) {
        file = std::filesystem::path(cache_dir) / ("reforbit_" + detail::hex_string(hash) + ".bin");
        if (auto cached = detail::try_load_reference(file, hash)) return *cached;
    }

    const TimeGrid storage = grid.n == 0
        ? grid
        : TimeGrid(grid.t0, 0.5 * grid.dt, 2 * grid.n);
    const OdeSystem sys = make_absolute_system(k, 1.0, 1.0);
    const Eigen::MatrixXd zero_thrust = Eigen::MatrixXd::Zero(storage.n, 3);

    ReferenceOrbit ref;
    ref.grid = storage;
    ref.states = rk4_propagate(sys, initial_state, zero_thrust, storage).states;
    ref.provenance = hash;
    if (!cache_dir.empty()) detail::try_store_reference(file, ref);
    return ref;
}

// Relative dynamics about a precomputed reference: x = (u, udot) with
// uddot = g(r0(t) + u) - g(r0(t)) + T / (1000 m). Evaluating the gravity
// difference keeps constraint-scale quantities free of the ~7e3 km
// reference magnitude.
inline OdeSystem make_relative_system(const ReferenceOrbit& reference, const PhysicalConstants& k,
                                      double mass_kg, double isp_s) {
    if (!(mass_kg > 0.0)) throw std::invalid_argument("make_relative_system: mass must be > 0");
    (void)isp_s;
    const double ts = thrust_accel_scale(mass_kg);
    // The reference is captured by pointer: it outlives any propagation it
    // feeds (owned by MissionModel or the caller).
    const ReferenceOrbit* ref = &reference;

    OdeSystem sys;
    sys.n_x = 6;
    sys.n_u = 3;
    sys.rhs = [ref, k, ts](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        const Vec3 r0 = ref->position_at(t);
        const Vec3 rel = x.head<3>();
        Eigen::VectorXd dx(6);
        dx.head<3>() = x.tail<3>();
        dx.tail<3>() = zonal_gravity_accel(r0 + rel, k) - zonal_gravity_accel(r0, k) + ts * u;
        return dx;
    };
    sys.jac_x = [ref, k](double t, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        const Vec3 r0 = ref->position_at(t);
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 6);
        j.block<3, 3>(0, 3) = Mat3::Identity();
        j.block<3, 3>(3, 0) = zonal_gravity_jacobian(r0 + x.head<3>(), k);
        return j;
    };
    sys.jac_u = [ts](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 3);
        j.block<3, 3>(3, 0) = ts * Mat3::Identity();
        return j;
    };
    return sys;
}

// Circular-speed state helper used by defaults and tests: circular orbit of
// radius r_km at inclination inc_rad, ascending node at +x.
inline StateVec6 circular_orbit_state(const PhysicalConstants& k, double r_km, double inc_rad) {
    const double v = std::sqrt(k.mu / r_km);
    StateVec6 x;
    x << r_km, 0.0, 0.0, 0.0, v * std::cos(inc_rad), v * std::sin(inc_rad);
    return x;
}

// Toolkit default reference orbit: ~600 km altitude circular orbit at
// sun-synchronous-like inclination (97.8 deg). Not a published value.
inline StateVec6 default_reference_orbit_state(const PhysicalConstants& k) {
    return circular_orbit_state(k, k.Re + 600.0, 97.8 * kPi / 180.0);
}

// Orbital period from the vis-viva semi-major axis of a state.
inline double orbital_period(const PhysicalConstants& k, const StateVec6& state) {
    const double r = state.head<3>().norm();
    const double v2 = state.tail<3>().squaredNorm();
    const double a = 1.0 / (2.0 / r - v2 / k.mu);
    if (!(a > 0.0)) throw std::invalid_argument("orbital_period: state is not elliptic");
    return 2.0 * kPi * std::sqrt(a * a * a / k.mu);
}

} // namespace talos

#endif // TALOS_ORBIT_DYNAMICS_HPP
