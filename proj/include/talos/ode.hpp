#ifndef TALOS_ODE_HPP
#define TALOS_ODE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "talos/time_grid.hpp"

namespace talos {

// First-order system xdot = f(t, x, u) with analytic Jacobians.
// jac_x is d f / d x (n_x by n_x), jac_u is d f / d u (n_x by n_u).
struct OdeSystem {
    int n_x = 0;
    int n_u = 0;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> rhs;
    std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> jac_x;
    std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> jac_u;
};

struct DivergenceError : std::runtime_error {
    std::int64_t step;
    explicit DivergenceError(std::int64_t k)
        : std::runtime_error("rk4_propagate: non-finite state produced at step " +
                             std::to_string(k)),
          step(k) {}
};

// Time grid, state history, piecewise-constant control history.
// Row k of states is x(t_k); row k of controls applies on [t_k, t_{k+1}).
// Immutable by convention once returned from rk4_propagate.
struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXd states;    // (n+1) x n_x
    Eigen::MatrixXd controls;  // n x n_u
};

// Classic fixed-step RK4 with zero-order-hold controls.
inline Trajectory rk4_propagate(const OdeSystem& sys, const Eigen::VectorXd& x0,
                                const Eigen::MatrixXd& controls, const TimeGrid& grid) {
    if (x0.size() != sys.n_x)
        throw std::invalid_argument("rk4_propagate: x0 has wrong dimension");
    if (controls.rows() != grid.n || controls.cols() != sys.n_u)
        throw std::invalid_argument("rk4_propagate: controls must be grid.n x n_u");
    if (!x0.allFinite())
        throw std::invalid_argument("rk4_propagate: x0 must be finite");

    Trajectory traj;
    traj.grid = grid;
    traj.states.resize(grid.n + 1, sys.n_x);
    traj.controls = controls;
    traj.states.row(0) = x0;

    const double dt = grid.dt;
    Eigen::VectorXd x = x0;
    for (std::int64_t k = 0; k < grid.n; ++k) {
        const double t = grid.time(k);
        const Eigen::VectorXd u = controls.row(k);
        const Eigen::VectorXd k1 = sys.rhs(t, x, u);
        const Eigen::VectorXd k2 = sys.rhs(t + 0.5 * dt, x + 0.5 * dt * k1, u);
        const Eigen::VectorXd k3 = sys.rhs(t + 0.5 * dt, x + 0.5 * dt * k2, u);
        const Eigen::VectorXd k4 = sys.rhs(t + dt, x + dt * k3, u);
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw DivergenceError(k);
        traj.states.row(k + 1) = x;
    }
    return traj;
}

// Jacobians of the one-step RK4 map x_{k+1} = Phi(x_k, u_k), assembled by
// chaining jac_x / jac_u through the four stages.
struct StepJacobians {
    std::vector<Eigen::MatrixXd> d_dx;  // n entries, each n_x x n_x
    std::vector<Eigen::MatrixXd> d_du;  // n entries, each n_x x n_u
};

inline StepJacobians step_transition_jacobians(const OdeSystem& sys, const Trajectory& traj) {
    const std::int64_t n = traj.grid.n;
    const double dt = traj.grid.dt;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(sys.n_x, sys.n_x);

    StepJacobians sj;
    sj.d_dx.reserve(n);
    sj.d_du.reserve(n);
    for (std::int64_t k = 0; k < n; ++k) {
        const double t = traj.grid.time(k);
        const Eigen::VectorXd x = traj.states.row(k);
        const Eigen::VectorXd u = traj.controls.row(k);

        const Eigen::VectorXd k1 = sys.rhs(t, x, u);
        const Eigen::VectorXd x2 = x + 0.5 * dt * k1;
        const Eigen::VectorXd k2 = sys.rhs(t + 0.5 * dt, x2, u);
        const Eigen::VectorXd x3 = x + 0.5 * dt * k2;
        const Eigen::VectorXd k3 = sys.rhs(t + 0.5 * dt, x3, u);
        const Eigen::VectorXd x4 = x + dt * k3;

        const Eigen::MatrixXd a1 = sys.jac_x(t, x, u);
        const Eigen::MatrixXd a2 = sys.jac_x(t + 0.5 * dt, x2, u);
        const Eigen::MatrixXd a3 = sys.jac_x(t + 0.5 * dt, x3, u);
        const Eigen::MatrixXd a4 = sys.jac_x(t + dt, x4, u);

        const Eigen::MatrixXd dk1 = a1;
        const Eigen::MatrixXd dk2 = a2 * (eye + 0.5 * dt * dk1);
        const Eigen::MatrixXd dk3 = a3 * (eye + 0.5 * dt * dk2);
        const Eigen::MatrixXd dk4 = a4 * (eye + dt * dk3);
        sj.d_dx.push_back(eye + (dt / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4));

        const Eigen::MatrixXd b1 = sys.jac_u(t, x, u);
        const Eigen::MatrixXd b2 = sys.jac_u(t + 0.5 * dt, x2, u);
        const Eigen::MatrixXd b3 = sys.jac_u(t + 0.5 * dt, x3, u);
        const Eigen::MatrixXd b4 = sys.jac_u(t + dt, x4, u);

        const Eigen::MatrixXd du1 = b1;
        const Eigen::MatrixXd du2 = a2 * (0.5 * dt * du1) + b2;
        const Eigen::MatrixXd du3 = a3 * (0.5 * dt * du2) + b3;
        const Eigen::MatrixXd du4 = a4 * (dt * du3) + b4;
        sj.d_du.push_back((dt / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4));
    }
    return sj;
}

// Exact gradient of J = sum_k cost_k(x_k, u_k) under the discrete RK4 map.
// dJ_dx has n+1 rows (one per state), dJ_du has n rows (one per control).
// Returns (dJ/dx0, dJ/dcontrols). The backward sweep multiplies by the
// transposed step-map Jacobians.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd>
adjoint_gradient(const OdeSystem& sys, const Trajectory& traj, const StepJacobians& sj,
                 const Eigen::MatrixXd& dJ_dx, const Eigen::MatrixXd& dJ_du) {
    const std::int64_t n = traj.grid.n;
    if (dJ_dx.rows() != n + 1 || dJ_dx.cols() != sys.n_x)
        throw std::invalid_argument("adjoint_gradient: dJ_dx must be (n+1) x n_x");
    if (dJ_du.rows() != n || dJ_du.cols() != sys.n_u)
        throw std::invalid_argument("adjoint_gradient: dJ_du must be n x n_u");
    if (static_cast<std::int64_t>(sj.d_dx.size()) != n)
        throw std::invalid_argument("adjoint_gradient: step jacobians do not match grid");

    Eigen::MatrixXd grad_u(n, sys.n_u);
    Eigen::VectorXd lam = dJ_dx.row(n).transpose();
    for (std::int64_t k = n - 1; k >= 0; --k) {
        grad_u.row(k) = dJ_du.row(k) + (sj.d_du[k].transpose() * lam).transpose();
        lam = dJ_dx.row(k).transpose() + sj.d_dx[k].transpose() * lam;
    }
    return {lam, grad_u};
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd>
adjoint_gradient(const OdeSystem& sys, const Trajectory& traj,
                 const Eigen::MatrixXd& dJ_dx, const Eigen::MatrixXd& dJ_du) {
    return adjoint_gradient(sys, traj, step_transition_jacobians(sys, traj), dJ_dx, dJ_du);
}

// Repeat each control row `factor` times (zero-order hold on a refined grid).
inline Eigen::MatrixXd refine_controls(const Eigen::MatrixXd& controls, int factor) {
    Eigen::MatrixXd out(controls.rows() * factor, controls.cols());
    for (Eigen::Index k = 0; k < controls.rows(); ++k)
        for (int j = 0; j < factor; ++j) out.row(k * factor + j) = controls.row(k);
    return out;
}

struct OrderCheck {
    bool exact = false;  // errors identically zero (dynamics exact for RK4)
    double order = 0.0;  // log2(error(dt) / error(dt/2)) against a dt/8 reference
};

// Observed convergence order, using a dt/8 propagation as the reference.
// The error is the max deviation over the coarse grid points (shared by all
// refinements), which stays informative even when terminal errors cancel by
// symmetry. RK4 on smooth problems lands near 4.
inline OrderCheck richardson_order_check(const OdeSystem& sys, const Eigen::VectorXd& x0,
                                         const Eigen::MatrixXd& controls, const TimeGrid& grid) {
    const auto states_on_coarse_grid = [&](int refine) {
        TimeGrid g(grid.t0, grid.dt / refine, grid.n * refine);
        const Trajectory traj = rk4_propagate(sys, x0, refine_controls(controls, refine), g);
        Eigen::MatrixXd coarse(grid.n + 1, sys.n_x);
        for (std::int64_t i = 0; i <= grid.n; ++i) coarse.row(i) = traj.states.row(i * refine);
        return coarse;
    };
    const Eigen::MatrixXd ref = states_on_coarse_grid(8);
    const double e1 = (states_on_coarse_grid(1) - ref).cwiseAbs().maxCoeff();
    const double e2 = (states_on_coarse_grid(2) - ref).cwiseAbs().maxCoeff();
    OrderCheck oc;
    if (e1 == 0.0 && e2 == 0.0) {
        oc.exact = true;
        return oc;
    }
    oc.order = std::log2(e1 / e2);
    return oc;
}

} // namespace talos

#endif // TALOS_ODE_HPP
