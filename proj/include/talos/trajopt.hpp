#ifndef TALOS_TRAJOPT_HPP
#define TALOS_TRAJOPT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "talos/csv.hpp"
#include "talos/frames.hpp"
#include "talos/mission.hpp"
#include "talos/ode.hpp"
#include "talos/types.hpp"

namespace talos {

// Formation geometry of the optics/detector pair at one instant.
// Positions are relative to the reference orbit, in km.
struct TelescopeGeometry {
    Vec3 u1, u2, s_hat;
    Vec3 d;                          // u2 - u1 [km]
    double separation_km = 0.0;
    double length_along_sun_km = 0.0;  // |d . s|
    double pointing_error_rad = 0.0;   // arccos((d . s) / |d|)
    double view_plane_error_m = 0.0;   // |d - (d.s) s|, diagnostic only

    static TelescopeGeometry from(const Vec3& u1, const Vec3& u2, const Vec3& s_hat) {
        TelescopeGeometry g;
        g.u1 = u1;
        g.u2 = u2;
        g.s_hat = s_hat;
        g.d = u2 - u1;
        g.separation_km = g.d.norm();
        const double proj = g.d.dot(s_hat);
        g.length_along_sun_km = std::abs(proj);
        if (g.separation_km > 0.0)
            g.pointing_error_rad = std::acos(std::clamp(proj / g.separation_km, -1.0, 1.0));
        g.view_plane_error_m = 1000.0 * (g.d - proj * s_hat).norm();
        return g;
    }
};

// Smoothed |x|: sqrt(x^2 + eps^2) - eps, zero at zero.
inline double smooth_abs(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }
inline double smooth_abs_d(double x, double eps) { return x / std::sqrt(x * x + eps * eps); }

struct PropellantResult {
    double J = 0.0;            // [kg]
    Eigen::MatrixXd gradient;  // same shape as thrusts [kg/N]
};

// Propellant mass integral sum_k sum_ij |T_ijk| / (g0 Isp_i) dt with the
// absolute value smoothed at scale epsilon (newtons). Thrust columns come
// in groups of 3 per spacecraft.
inline PropellantResult propellant_objective(const Eigen::MatrixXd& thrusts,
                                             const std::vector<double>& isps,
                                             const TimeGrid& grid, double epsilon_N,
                                             double g0 = 9.80665) {
    if (!(epsilon_N > 0.0))
        throw std::invalid_argument("propellant_objective: epsilon must be > 0");
    if (thrusts.cols() != static_cast<Eigen::Index>(3 * isps.size()))
        throw std::invalid_argument("propellant_objective: thrust columns != 3 per spacecraft");
    if (thrusts.rows() != grid.n)
        throw std::invalid_argument("propellant_objective: thrust rows != grid.n");

    PropellantResult out;
    out.gradient.resize(thrusts.rows(), thrusts.cols());
    for (Eigen::Index col = 0; col < thrusts.cols(); ++col) {
        const double isp = isps[static_cast<std::size_t>(col / 3)];
        const double mdot_per_N = 1.0 / (g0 * isp);           // [kg/s per N]
        const double eps_mdot = epsilon_N * mdot_per_N;       // smoothing on mdot scale
        for (Eigen::Index k = 0; k < thrusts.rows(); ++k) {
            const double mdot = thrusts(k, col) * mdot_per_N;
            out.J += smooth_abs(mdot, eps_mdot) * grid.dt;
            out.gradient(k, col) = smooth_abs_d(mdot, eps_mdot) * mdot_per_N * grid.dt;
        }
    }
    return out;
}

// Constraint families of the telescope problem, aggregated over grid points
// with a Kreisselmeier-Steinhauser soft max. Internally each family is
// scaled by its tolerance so KS <= 0 is achievable inside the band;
// violations are reported back in natural units (meters, radians, km).
enum class ConstraintFamily { length = 0, pointing = 1, separation = 2 };

struct ConstraintFamilyEval {
    bool active = false;
    double ks = 0.0;                 // scaled KS aggregate
    double worst_natural = 0.0;      // max pointwise violation [m | rad | km]
    double ks_gap_natural = 0.0;     // ln(n)/rho mapped to natural units
    Eigen::MatrixXd dks_dx1, dks_dx2;  // (n+1) x 6, filled when gradients requested
};

struct TelescopeConstraintConfig {
    double length_km = 0.04;
    double tol_km = 1.5e-7;
    double halfangle_rad = arcsec2rad(90.0);
    double max_sep_km = 5.0;
    std::vector<std::pair<double, double>> windows;  // [s]
    double rho = 100.0;  // KS sharpness
    // Aggregation unit as a multiple of each family's tolerance. The KS gap
    // ln(n)/rho then lands at ~0.3 tolerance units: inside the feasible band,
    // while keeping enough softmax width that nearby grid points share the
    // gradient (a pure hard max stalls the line search).
    double aggregation_scale = 6.7;

    static TelescopeConstraintConfig from_spec(const VirtualTelescopeSpec& spec) {
        TelescopeConstraintConfig cfg;
        cfg.length_km = spec.telescope_length_m / 1000.0;
        cfg.tol_km = spec.telescope_length_tol_mm * 1e-6;
        cfg.halfangle_rad = arcsec2rad(spec.telescope_view_halfangle_tol_arcsec);
        cfg.max_sep_km = spec.max_separation_all_phases_km;
        cfg.windows = spec.observation_windows;
        return cfg;
    }
};

struct ConstraintEval {
    std::array<ConstraintFamilyEval, 3> family;
    double feasibility_natural = 0.0;  // max pointwise violation over all families
};

inline std::vector<bool> window_mask(const TimeGrid& grid,
                                     const std::vector<std::pair<double, double>>& windows) {
    std::vector<bool> mask(grid.n + 1, false);
    for (std::int64_t p = 0; p <= grid.n; ++p) {
        const double t = grid.time(p);
        for (const auto& [a, b] : windows)
            if (t >= a - 1e-9 && t <= b + 1e-9) {
                mask[p] = true;
                break;
            }
    }
    return mask;
}

namespace detail_trajopt {

// One scalar constraint term: scaled value plus position-gradients at one
// grid point (gradient w.r.t. u2; the u1 gradient is its negative).
struct Term {
    std::int64_t point;
    double value;
    Vec3 dvalue_du2;
};

// KS over the terms: m + ln(sum exp(rho (g - m))) / rho.
inline double ks_aggregate(const std::vector<Term>& terms, double rho) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) m = std::max(m, t.value);
    double acc = 0.0;
    for (const auto& t : terms) acc += std::exp(rho * (t.value - m));
    return m + std::log(acc) / rho;
}

inline void ks_gradients(const std::vector<Term>& terms, double rho, Eigen::MatrixXd& dx1,
                         Eigen::MatrixXd& dx2) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) m = std::max(m, t.value);
    double acc = 0.0;
    for (const auto& t : terms) acc += std::exp(rho * (t.value - m));
    for (const auto& t : terms) {
        const double w = std::exp(rho * (t.value - m)) / acc;
        if (w == 0.0) continue;
        dx2.row(t.point).head<3>() += w * t.dvalue_du2.transpose();
        dx1.row(t.point).head<3>() -= w * t.dvalue_du2.transpose();
    }
}

} // namespace detail_trajopt

// Pointwise formation constraints aggregated into three scalars (length
// band, pointing cone, separation cap), with gradients w.r.t. the two state
// histories for the adjoint chain. The pointing cone is expressed through
// the cosine so its gradient stays bounded near perfect alignment.
inline ConstraintEval telescope_constraints(const Trajectory& traj1, const Trajectory& traj2,
                                            const std::vector<Vec3>& sun_dir_series,
                                            const TelescopeConstraintConfig& cfg,
                                            bool with_gradients = true) {
    if (!(traj1.grid == traj2.grid))
        throw std::invalid_argument("telescope_constraints: trajectories must share the grid");
    const std::int64_t n = traj1.grid.n;
    if (sun_dir_series.size() != static_cast<std::size_t>(n + 1))
        throw std::invalid_argument("telescope_constraints: sun series must have n+1 entries");
    for (const auto& [a, b] : cfg.windows)
        if (a < traj1.grid.t0 - 1e-9 || b > traj1.grid.t_end() + 1e-9)
            throw std::invalid_argument("telescope_constraints: window outside the grid span");

    const auto mask = window_mask(traj1.grid, cfg.windows);
    const double theta = cfg.halfangle_rad;
    const double length_scale = cfg.tol_km * cfg.aggregation_scale;
    // Pointing in log space: c = ln((1 - cos ang) / (1 - cos theta_tol)).
    // The KS participation window is then proportional to the current
    // error, which keeps the softmax wide while errors are large, and the
    // conservatism at the cone is only the factor exp(ln n / rho) - 1.
    const double t_tol = 1.0 - std::cos(theta);
    constexpr double t_floor = 1e-30;  // exactly aligned pairs: feasible, weightless

    std::array<std::vector<detail_trajopt::Term>, 3> terms;
    ConstraintEval out;

    for (std::int64_t p = 0; p <= n; ++p) {
        const Vec3 u1 = traj1.states.row(p).head<3>();
        const Vec3 u2 = traj2.states.row(p).head<3>();
        const Vec3 s = sun_dir_series[p];
        const Vec3 d = u2 - u1;
        const double sep = d.norm();

        // Separation cap applies at every phase.
        {
            const Vec3 grad = sep > 1e-12 ? Vec3(d / sep) : Vec3::Zero();
            terms[2].push_back({p, (sep - cfg.max_sep_km) / cfg.max_sep_km,
                                grad / cfg.max_sep_km});
            auto& fam = out.family[2];
            fam.worst_natural = std::max(fam.worst_natural, sep - cfg.max_sep_km);
        }
        if (!mask[p]) continue;
        if (sep < 1e-12)
            throw std::runtime_error(
                "telescope_constraints: zero separation inside an observation window at t = " +
                std::to_string(traj1.grid.time(p)));

        const double proj = d.dot(s);
        const double len = std::abs(proj);
        const double sgn = proj >= 0.0 ? 1.0 : -1.0;

        // Length band, both sides.
        terms[0].push_back({p, (cfg.length_km - cfg.tol_km - len) / length_scale,
                            -sgn / length_scale * s});
        terms[0].push_back({p, (len - cfg.length_km - cfg.tol_km) / length_scale,
                            sgn / length_scale * s});
        {
            auto& fam = out.family[0];
            const double viol_km =
                std::max({0.0, cfg.length_km - cfg.tol_km - len, len - cfg.length_km - cfg.tol_km});
            fam.worst_natural = std::max(fam.worst_natural, viol_km * 1000.0);  // meters
        }

        // Pointing cone: 1 - d.s/|d| <= 1 - cos(theta_tol), taken in log space.
        const double cosang = proj / sep;
        const Vec3 dcos_du2 = s / sep - proj * d / (sep * sep * sep);
        const double t_val = std::max(1.0 - cosang, t_floor);
        terms[1].push_back({p, std::log(t_val / t_tol), (-1.0 / t_val) * dcos_du2});
        {
            auto& fam = out.family[1];
            const double ang = std::acos(std::clamp(cosang, -1.0, 1.0));
            fam.worst_natural = std::max(fam.worst_natural, ang - theta);  // radians
        }
    }

    for (int f = 0; f < 3; ++f) {
        auto& fam = out.family[f];
        fam.worst_natural = std::max(fam.worst_natural, 0.0);
        if (terms[f].empty()) continue;
        fam.active = true;
        fam.ks = detail_trajopt::ks_aggregate(terms[f], cfg.rho);
        const double ln_gap = std::log(static_cast<double>(terms[f].size())) / cfg.rho;
        // Natural-unit gap per family: meters, radians, kilometers.
        fam.ks_gap_natural = f == 0   ? ln_gap * length_scale * 1000.0
                             : f == 1 ? theta * (std::exp(ln_gap) - 1.0)
                                      : ln_gap * cfg.max_sep_km;
        if (with_gradients) {
            fam.dks_dx1 = Eigen::MatrixXd::Zero(n + 1, 6);
            fam.dks_dx2 = Eigen::MatrixXd::Zero(n + 1, 6);
            detail_trajopt::ks_gradients(terms[f], cfg.rho, fam.dks_dx1, fam.dks_dx2);
        }
        out.feasibility_natural = std::max(out.feasibility_natural, fam.worst_natural);
    }
    return out;
}

// ---------------------------------------------------------------------------
// The full problem: two relative propagations + objective + constraints.

struct TrajOptProblem {
    OdeSystem sys1, sys2;
    StateVec6 x1_0, x2_0;
    TimeGrid grid;
    std::vector<Vec3> sun_dirs;  // n+1 unit vectors
    TelescopeConstraintConfig constraints;
    double isp1 = 47.0, isp2 = 47.0;        // [s]
    double t_max_1 = 0.05, t_max_2 = 0.05;  // per-component bound [N]
    double eps_thrust = 1e-6;               // |.| smoothing [N]
    double g0 = 9.80665;

    Eigen::Index n_design() const { return 6 * grid.n; }
};

inline TrajOptProblem make_trajopt_problem(const MissionModel& model, double rho_ks = 100.0) {
    if (model.spacecraft.size() != 2)
        throw std::invalid_argument("make_trajopt_problem: expected two spacecraft");
    TrajOptProblem p;
    p.sys1 = model.spacecraft[0].dynamics;
    p.sys2 = model.spacecraft[1].dynamics;
    p.x1_0 = model.spacecraft[0].initial_offset_state;
    p.x2_0 = model.spacecraft[1].initial_offset_state;
    p.grid = model.grid;
    p.sun_dirs.assign(model.grid.n + 1, model.spec.sun_direction);
    p.constraints = TelescopeConstraintConfig::from_spec(model.spec);
    p.constraints.rho = rho_ks;
    p.isp1 = model.spacecraft[0].specific_impulse;
    p.isp2 = model.spacecraft[1].specific_impulse;
    p.t_max_1 = model.spacecraft[0].max_thrust_n;
    p.t_max_2 = model.spacecraft[1].max_thrust_n;
    p.g0 = model.constants.g0;
    return p;
}

// Thrust layout in the flat design vector: first spacecraft rows, then
// second spacecraft rows (each row-major N x 3).
inline Eigen::MatrixXd unpack_thrust(const Eigen::VectorXd& z, std::int64_t n, int craft) {
    Eigen::MatrixXd t(n, 3);
    const Eigen::Index base = craft * 3 * n;
    for (std::int64_t k = 0; k < n; ++k) t.row(k) = z.segment<3>(base + 3 * k);
    return t;
}

inline Eigen::VectorXd pack_thrust(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2) {
    Eigen::VectorXd z(3 * (t1.rows() + t2.rows()));
    for (Eigen::Index k = 0; k < t1.rows(); ++k) z.segment<3>(3 * k) = t1.row(k);
    const Eigen::Index base = 3 * t1.rows();
    for (Eigen::Index k = 0; k < t2.rows(); ++k) z.segment<3>(base + 3 * k) = t2.row(k);
    return z;
}

struct ProblemPoint {
    double J = 0.0;
    Eigen::VectorXd gradJ;
    std::array<ConstraintFamilyEval, 3> family;
    std::array<Eigen::VectorXd, 3> gradc;
    double feasibility = 0.0;
    Trajectory traj1, traj2;
};

// Propagate, evaluate objective and the three aggregated constraints; chain
// constraint gradients through the discrete adjoint of each propagation.
inline ProblemPoint evaluate_problem(const TrajOptProblem& p, const Eigen::VectorXd& z,
                                     bool with_gradients) {
    if (z.size() != p.n_design())
        throw std::invalid_argument("evaluate_problem: design vector size mismatch");
    const std::int64_t n = p.grid.n;
    ProblemPoint out;
    const Eigen::MatrixXd t1 = unpack_thrust(z, n, 0);
    const Eigen::MatrixXd t2 = unpack_thrust(z, n, 1);
    out.traj1 = rk4_propagate(p.sys1, p.x1_0, t1, p.grid);
    out.traj2 = rk4_propagate(p.sys2, p.x2_0, t2, p.grid);

    Eigen::MatrixXd thrusts(n, 6);
    thrusts.leftCols<3>() = t1;
    thrusts.rightCols<3>() = t2;
    const auto prop = propellant_objective(thrusts, {p.isp1, p.isp2}, p.grid, p.eps_thrust, p.g0);
    out.J = prop.J;

    auto ce = telescope_constraints(out.traj1, out.traj2, p.sun_dirs, p.constraints,
                                    with_gradients);
    out.family = std::move(ce.family);
    out.feasibility = ce.feasibility_natural;

    if (!with_gradients) return out;

    out.gradJ = pack_thrust(prop.gradient.leftCols<3>(), prop.gradient.rightCols<3>());

    const StepJacobians sj1 = step_transition_jacobians(p.sys1, out.traj1);
    const StepJacobians sj2 = step_transition_jacobians(p.sys2, out.traj2);
    const Eigen::MatrixXd zero_du = Eigen::MatrixXd::Zero(n, 3);
    for (int f = 0; f < 3; ++f) {
        if (!out.family[f].active) continue;
        const auto [g0_1, gu_1] =
            adjoint_gradient(p.sys1, out.traj1, sj1, out.family[f].dks_dx1, zero_du);
        const auto [g0_2, gu_2] =
            adjoint_gradient(p.sys2, out.traj2, sj2, out.family[f].dks_dx2, zero_du);
        out.gradc[f] = pack_thrust(gu_1, gu_2);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Augmented-Lagrangian solver with a projected L-BFGS inner loop.

struct SolverOptions {
    int max_outer = 30;
    double feas_tol = 1e-3;   // natural-unit pointwise violation
    double opt_tol = 1e-6;    // infinity norm of the projected AL gradient
    int inner_max_iter = 600;
    double penalty_init = 10.0;
    double penalty_growth = 10.0;
    double penalty_cap = 1e8;
    int lbfgs_memory = 10;
};

struct SolverReport {
    struct Row {
        int iter;
        double objective;
        double feasibility;
        double optimality;
        double penalty;
    };
    std::vector<Row> history;
    bool converged = false;
    std::string termination;
};

struct SolveResult {
    Eigen::MatrixXd thrust1, thrust2;  // N x 3 each [N]
    Trajectory traj1, traj2;
    SolverReport report;
    double objective = 0.0;
    double feasibility = 0.0;
};

namespace detail_trajopt {

// The optimizer works with constraints normalized by the infinity norm of
// their gradient at the initial point, so penalty curvature and multiplier
// magnitudes stay O(1) regardless of the tolerance-scaled KS values.
struct AlState {
    const TrajOptProblem* p;
    std::array<double, 3> lambda{0.0, 0.0, 0.0};
    std::array<double, 3> kappa{1.0, 1.0, 1.0};
    double penalty = 10.0;

    double scaled_c(const ProblemPoint& pt, int f) const { return pt.family[f].ks / kappa[f]; }

    double merit(const ProblemPoint& pt) const {
        double m = pt.J;
        for (int f = 0; f < 3; ++f) {
            if (!pt.family[f].active) continue;
            const double viol = std::max(0.0, lambda[f] + penalty * scaled_c(pt, f));
            m += (viol * viol - lambda[f] * lambda[f]) / (2.0 * penalty);
        }
        return m;
    }

    Eigen::VectorXd merit_gradient(const ProblemPoint& pt) const {
        Eigen::VectorXd g = pt.gradJ;
        for (int f = 0; f < 3; ++f) {
            if (!pt.family[f].active) continue;
            const double mult = std::max(0.0, lambda[f] + penalty * scaled_c(pt, f));
            if (mult > 0.0) g += (mult / kappa[f]) * pt.gradc[f];
        }
        return g;
    }
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd& z, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

struct InnerResult {
    Eigen::VectorXd z;
    ProblemPoint point;
    double pg_norm = 0.0;
    int iterations = 0;
    bool line_search_failed = false;
};

// Projected L-BFGS with Armijo backtracking on the AL merit. Every other
// iteration slides along the walls: the direction is projected onto the
// tangent space of the near-boundary aggregated constraints, whose penalty
// curvature would otherwise pin the step length near zero.
inline InnerResult lbfgs_inner(const AlState& al, Eigen::VectorXd z, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi, double tol, int max_iter, int memory) {
    const TrajOptProblem& p = *al.p;
    InnerResult res;
    ProblemPoint pt = evaluate_problem(p, z, true);
    double merit = al.merit(pt);
    Eigen::VectorXd grad = al.merit_gradient(pt);

    std::deque<Eigen::VectorXd> ss, ys;
    std::deque<double> rhos;

    auto pg_norm = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& gg) {
        return (project_box(zz - gg, lo, hi) - zz).lpNorm<Eigen::Infinity>();
    };

    // Families sitting on their boundary (engaged multiplier, aggregate
    // within one aggregation unit of zero): sliding candidates.
    auto wall_normals = [&](const ProblemPoint& point) {
        std::vector<Eigen::VectorXd> normals;
        for (int f = 0; f < 3; ++f) {
            if (!point.family[f].active) continue;
            const double mult =
                std::max(0.0, al.lambda[f] + al.penalty * al.scaled_c(point, f));
            if (mult <= 0.0 || point.family[f].ks > 1.0) continue;
            Eigen::VectorXd n = point.gradc[f];
            for (const auto& prev : normals) n -= prev.dot(n) * prev;
            const double nn = n.norm();
            if (nn > 1e-12 * point.gradc[f].norm()) normals.push_back(n / nn);
        }
        return normals;
    };

    res.pg_norm = pg_norm(z, grad);
    int it = 0;
    bool restarted = false;
    while (res.pg_norm > tol && it < max_iter) {
        ++it;
        // Two-loop recursion.
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(ss.size());
        for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
            alpha[i] = rhos[i] * ss[i].dot(q);
            q -= alpha[i] * ys[i];
        }
        if (!ss.empty()) {
            const double gamma = ss.back().dot(ys.back()) / ys.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < ss.size(); ++i) {
            const double beta = rhos[i] * ys[i].dot(q);
            q += (alpha[i] - beta) * ss[i];
        }
        Eigen::VectorXd dir = -q;
        if (it % 2 == 0) {
            for (const auto& n : wall_normals(pt)) dir -= n.dot(dir) * n;
        }
        if (dir.dot(grad) > -1e-14 * dir.norm() * grad.norm()) dir = -grad;
        // Far from the solution the raw first-order direction can dwarf the
        // box; cap the trial step at one box width so backtracking starts
        // from a point the projection does not flatten.
        const double box_width = (hi - lo).maxCoeff();
        const double dir_max = dir.cwiseAbs().maxCoeff();
        if (dir_max > box_width) dir *= box_width / dir_max;

        // Backtracking along the projected path.
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd z_new;
        ProblemPoint pt_new;
        double merit_new = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            z_new = project_box(z + step * dir, lo, hi);
            const Eigen::VectorXd dz = z_new - z;
            if (dz.lpNorm<Eigen::Infinity>() == 0.0) break;
            pt_new = evaluate_problem(p, z_new, false);
            merit_new = al.merit(pt_new);
            if (merit_new <= merit + 1e-4 * grad.dot(dz)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // One retry from a steepest-descent restart: stale curvature
            // pairs can poison the direction near softmax weight handoffs.
            if (!restarted && !ss.empty()) {
                restarted = true;
                ss.clear();
                ys.clear();
                rhos.clear();
                continue;
            }
            res.line_search_failed = true;
            break;
        }
        restarted = false;

        ProblemPoint pt_full = evaluate_problem(p, z_new, true);
        Eigen::VectorXd grad_new = al.merit_gradient(pt_full);
        const Eigen::VectorXd s = z_new - z;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            ss.push_back(s);
            ys.push_back(y);
            rhos.push_back(1.0 / sy);
            if (static_cast<int>(ss.size()) > memory) {
                ss.pop_front();
                ys.pop_front();
                rhos.pop_front();
            }
        }
        z = std::move(z_new);
        pt = std::move(pt_full);
        merit = al.merit(pt);
        grad = std::move(grad_new);
        res.pg_norm = pg_norm(z, grad);
    }
    res.z = std::move(z);
    res.point = std::move(pt);
    res.iterations = it;
    return res;
}

} // namespace detail_trajopt

inline SolveResult solve(const TrajOptProblem& p, const SolverOptions& options = {},
                         const Eigen::VectorXd* initial_guess = nullptr) {
    const std::int64_t n = p.grid.n;
    Eigen::VectorXd z = initial_guess ? *initial_guess : Eigen::VectorXd::Zero(p.n_design());
    Eigen::VectorXd lo(p.n_design()), hi(p.n_design());
    lo.head(3 * n).setConstant(-p.t_max_1);
    hi.head(3 * n).setConstant(p.t_max_1);
    lo.tail(3 * n).setConstant(-p.t_max_2);
    hi.tail(3 * n).setConstant(p.t_max_2);
    z = detail_trajopt::project_box(z, lo, hi);

    detail_trajopt::AlState al;
    al.p = &p;
    al.penalty = options.penalty_init;
    // Constraint normalization: kappa_f tracks |grad c_f| so the optimizer
    // always sees O(1) constraint gradients. It is refreshed between outer
    // rounds (the log-space pointing gradient grows steeply as the cone
    // tightens), with multipliers rescaled to keep the AL term continuous.
    const auto refresh_kappa = [&al](const ProblemPoint& pt) {
        for (int f = 0; f < 3; ++f) {
            if (!pt.family[f].active) continue;
            const double fresh = std::max(1.0, pt.gradc[f].lpNorm<Eigen::Infinity>());
            al.lambda[f] *= fresh / al.kappa[f];
            al.kappa[f] = fresh;
        }
    };
    refresh_kappa(evaluate_problem(p, z, true));

    SolveResult result;
    SolverReport& report = result.report;
    double prev_feas = std::numeric_limits<double>::infinity();
    double omega = 1e-2;
    bool line_search_failed = false;

    detail_trajopt::InnerResult inner;
    Eigen::VectorXd z_prev;
    for (int outer = 1; outer <= options.max_outer; ++outer) {
        const double tol = std::max(0.9 * options.opt_tol, omega);
        inner = detail_trajopt::lbfgs_inner(al, z, lo, hi, tol, options.inner_max_iter,
                                            options.lbfgs_memory);
        z = inner.z;
        const ProblemPoint& pt = inner.point;

        report.history.push_back(
            {outer, pt.J, pt.feasibility, inner.pg_norm, al.penalty});

        if (pt.feasibility < options.feas_tol && inner.pg_norm < options.opt_tol) {
            report.converged = true;
            report.termination = "converged";
            break;
        }
        if (inner.line_search_failed && pt.feasibility < options.feas_tol) {
            // No further merit progress available at a feasible point.
            line_search_failed = true;
            report.termination = "inner line search stalled";
            break;
        }
        if (z_prev.size() == z.size() && z_prev == z && al.penalty >= options.penalty_cap) {
            if (++frozen_rounds >= 3) {
                line_search_failed = true;
                report.termination = "no further progress";
                break;
            }
        } else {
            frozen_rounds = 0;
        }
        z_prev = z;

        // Multiplier step on sufficient feasibility progress, penalty
        // growth otherwise (never both in one round: the combination
        // overshoots when the inner solve is still loose).
        if (pt.feasibility <= 0.25 * prev_feas || pt.feasibility < options.feas_tol) {
            for (int f = 0; f < 3; ++f)
                if (pt.family[f].active)
                    al.lambda[f] = std::max(0.0, al.lambda[f] + al.penalty * al.scaled_c(pt, f));
            prev_feas = std::max(pt.feasibility, 1e-300);
        } else {
            al.penalty = std::min(al.penalty * options.penalty_growth, options.penalty_cap);
        }
        refresh_kappa(pt);
        omega = std::max(0.9 * options.opt_tol, 0.2 * omega);
    }
    if (!report.converged && report.termination.empty())
        report.termination = line_search_failed ? "inner line search stalled"
                                                : "outer iteration cap reached";

    result.thrust1 = unpack_thrust(z, n, 0);
    result.thrust2 = unpack_thrust(z, n, 1);
    result.traj1 = inner.point.traj1;
    result.traj2 = inner.point.traj2;
    result.objective = inner.point.J;
    result.feasibility = inner.point.feasibility;
    return result;
}

// Convergence history as CSV: one row per outer iteration.
inline void report_convergence(const SolverReport& report, const std::string& path) {
    if (report.history.empty())
        throw std::invalid_argument("report_convergence: empty report");
    CsvWriter csv(path, {"iter", "objective", "feasibility", "optimality"});
    for (const auto& row : report.history)
        csv.row({static_cast<double>(row.iter), row.objective, row.feasibility, row.optimality});
}

} // namespace talos

#endif // TALOS_TRAJOPT_HPP
