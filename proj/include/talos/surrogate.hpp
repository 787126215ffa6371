#ifndef TALOS_SURROGATE_HPP
#define TALOS_SURROGATE_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "talos/illumination.hpp"
#include "talos/types.hpp"

namespace talos {

namespace bspline {

// Uniform cubic B-spline weights on a unit cell, t in [0, 1). The four
// weights act on coefficients (i-1, i, i+1, i+2) for cell i.
struct CellWeights {
    std::array<double, 4> w, dw, ddw;
};

inline CellWeights uniform_cubic_weights(double t) {
    const double t2 = t * t, t3 = t2 * t;
    CellWeights cw;
    cw.w = {(1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0};
    cw.dw = {-0.5 * (1.0 - t) * (1.0 - t),
             0.5 * (3.0 * t2 - 4.0 * t),
             0.5 * (-3.0 * t2 + 2.0 * t + 1.0),
             0.5 * t2};
    cw.ddw = {1.0 - t, 3.0 * t - 2.0, 1.0 - 3.0 * t, t};
    return cw;
}

// Cox-de Boor basis functions and first/second derivatives for a cubic
// clamped spline (NURBS-book style triangular table). `span` satisfies
// knots[span] <= x < knots[span+1]; the active coefficients are
// span-3 .. span.
inline void cubic_basis_derivatives(const std::vector<double>& knots, int span, double x,
                                    std::array<double, 4>& w, std::array<double, 4>& dw,
                                    std::array<double, 4>& ddw) {
    constexpr int p = 3;
    double ndu[p + 1][p + 1];
    double left[p + 1], right[p + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) w[j] = ndu[j][p];

    // Derivatives from the lower-order bases.
    double a[2][p + 1];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        double d1 = 0.0, d2 = 0.0;
        for (int kk = 1; kk <= 2; ++kk) {
            double d = 0.0;
            const int rk = r - kk, pk = p - kk;
            if (r >= kk) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                d += a[s2][kk] * ndu[r][pk];
            }
            if (kk == 1) d1 = d; else d2 = d;
            std::swap(s1, s2);
        }
        dw[r] = d1 * p;
        ddw[r] = d2 * p * (p - 1);
    }
}

inline int find_span(const std::vector<double>& knots, int n_basis, double x) {
    constexpr int p = 3;
    if (x >= knots[n_basis]) return n_basis - 1;  // right end of the last span
    if (x <= knots[p]) return p;
    auto it = std::upper_bound(knots.begin() + p, knots.begin() + n_basis + 1, x);
    return static_cast<int>(it - knots.begin()) - 1;
}

// Clamped knot vector on [lo, hi] with n_basis cubic basis functions.
inline std::vector<double> clamped_knots(double lo, double hi, int n_basis) {
    constexpr int p = 3;
    std::vector<double> knots(n_basis + p + 1);
    const int spans = n_basis - p;
    for (int i = 0; i <= p; ++i) {
        knots[i] = lo;
        knots[n_basis + i] = hi;
    }
    for (int i = 1; i < spans; ++i)
        knots[p + i] = lo + (hi - lo) * static_cast<double>(i) / spans;
    return knots;
}

} // namespace bspline

// Tensor-product cubic spline of illuminated fraction over azimuth and
// elevation: periodic uniform basis in azimuth (period 2pi), clamped basis
// in elevation on [-pi/2, pi/2]. C^2 by construction.
struct IlluminationSurrogate {
    int n_az = 0;                 // azimuth basis count (>= 4)
    int n_el = 0;                 // elevation basis count (>= 4)
    double lambda = 0.0;          // energy regularization weight
    double el_min = -0.5 * kPi;
    double el_max = 0.5 * kPi;
    std::vector<double> el_knots;
    Eigen::MatrixXd coef;         // n_az x n_el
};

struct SurrogateEval {
    double value = 0.0;
    double d_azimuth = 0.0;
    double d_elevation = 0.0;
};

namespace detail {

struct AxisWeights {
    std::array<int, 4> idx;
    std::array<double, 4> w, dw, ddw;
};

inline AxisWeights azimuth_weights(const IlluminationSurrogate& s, double az) {
    const double period = 2.0 * kPi;
    double a = std::fmod(az, period);
    if (a < 0.0) a += period;
    const double h = period / s.n_az;
    double cell_f = std::floor(a / h);
    if (cell_f >= s.n_az) cell_f = s.n_az - 1;  // a == period after roundoff
    const int cell = static_cast<int>(cell_f);
    const double t = a / h - cell_f;
    const auto cw = bspline::uniform_cubic_weights(t);
    AxisWeights out;
    for (int m = 0; m < 4; ++m) {
        out.idx[m] = (cell - 1 + m + s.n_az) % s.n_az;
        out.w[m] = cw.w[m];
        out.dw[m] = cw.dw[m] / h;
        out.ddw[m] = cw.ddw[m] / (h * h);
    }
    return out;
}

inline AxisWeights elevation_weights(const IlluminationSurrogate& s, double el) {
    if (el < s.el_min - 1e-9 || el > s.el_max + 1e-9)
        throw std::domain_error("surrogate_eval: elevation out of range");
    const double x = std::clamp(el, s.el_min, s.el_max);
    const int span = bspline::find_span(s.el_knots, s.n_el, x);
    AxisWeights out;
    bspline::cubic_basis_derivatives(s.el_knots, span, x, out.w, out.dw, out.ddw);
    for (int m = 0; m < 4; ++m) out.idx[m] = span - 3 + m;
    return out;
}

} // namespace detail

inline SurrogateEval surrogate_eval(const IlluminationSurrogate& s, double azimuth,
                                    double elevation) {
    const auto aw = detail::azimuth_weights(s, azimuth);
    const auto ew = detail::elevation_weights(s, elevation);
    SurrogateEval out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double c = s.coef(aw.idx[i], ew.idx[j]);
            out.value += c * aw.w[i] * ew.w[j];
            out.d_azimuth += c * aw.dw[i] * ew.w[j];
            out.d_elevation += c * aw.w[i] * ew.dw[j];
        }
    return out;
}

// Least-squares spline fit with a second-derivative (bending energy)
// penalty lambda * int (f_aa^2 + 2 f_ae^2 + f_ee^2). Azimuth periodicity
// comes from the wrapped basis. Throws when the normal system is rank
// deficient (under-sampled data at lambda = 0).
inline IlluminationSurrogate fit_surrogate(const std::vector<IlluminationSample>& samples,
                                           int n_az_knots, int n_el_knots, double lambda) {
    if (n_az_knots < 4 || n_el_knots < 4)
        throw std::invalid_argument("fit_surrogate: need at least 4 basis functions per axis");
    if (lambda < 0.0) throw std::invalid_argument("fit_surrogate: lambda must be >= 0");
    if (2 * samples.size() < static_cast<std::size_t>(n_az_knots) * n_el_knots)
        throw std::invalid_argument("fit_surrogate: too few samples for the requested knots");

    IlluminationSurrogate s;
    s.n_az = n_az_knots;
    s.n_el = n_el_knots;
    s.lambda = lambda;
    s.el_knots = bspline::clamped_knots(s.el_min, s.el_max, n_el_knots);
    const int nc = n_az_knots * n_el_knots;
    const auto flat = [&](int ia, int ie) { return ia * n_el_knots + ie; };

    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
    s.coef = Eigen::MatrixXd::Zero(n_az_knots, n_el_knots);  // shape for the axis helpers

    for (const auto& sample : samples) {
        const auto aw = detail::azimuth_weights(s, sample.azimuth);
        const auto ew = detail::elevation_weights(s, sample.elevation);
        std::array<int, 16> cols;
        std::array<double, 16> vals;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cols[4 * i + j] = flat(aw.idx[i], ew.idx[j]);
                vals[4 * i + j] = aw.w[i] * ew.w[j];
            }
        for (int a = 0; a < 16; ++a) {
            rhs[cols[a]] += vals[a] * sample.illuminated_fraction;
            for (int b = 0; b < 16; ++b) normal(cols[a], cols[b]) += vals[a] * vals[b];
        }
    }

    if (lambda > 0.0) {
        // 3-point Gauss quadrature per cell on both axes.
        static constexpr double gx[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
        static constexpr double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        const double h_az = 2.0 * kPi / n_az_knots;
        for (int cell = 0; cell < n_az_knots; ++cell) {
            for (int qa = 0; qa < 3; ++qa) {
                const double az = (cell + gx[qa]) * h_az;
                const auto aw = detail::azimuth_weights(s, az);
                for (int span = 3; span < n_el_knots; ++span) {
                    const double e0 = s.el_knots[span], e1 = s.el_knots[span + 1];
                    if (!(e1 > e0)) continue;
                    for (int qe = 0; qe < 3; ++qe) {
                        const double el = e0 + gx[qe] * (e1 - e0);
                        const auto ew = detail::elevation_weights(s, el);
                        const double wq = lambda * gw[qa] * h_az * gw[qe] * (e1 - e0);
                        std::array<int, 16> cols;
                        std::array<double, 16> raa, rae, ree;
                        for (int i = 0; i < 4; ++i)
                            for (int j = 0; j < 4; ++j) {
                                const int m = 4 * i + j;
                                cols[m] = flat(aw.idx[i], ew.idx[j]);
                                raa[m] = aw.ddw[i] * ew.w[j];
                                rae[m] = aw.dw[i] * ew.dw[j];
                                ree[m] = aw.w[i] * ew.ddw[j];
                            }
                        for (int a = 0; a < 16; ++a)
                            for (int b = 0; b < 16; ++b)
                                normal(cols[a], cols[b]) +=
                                    wq * (raa[a] * raa[b] + 2.0 * rae[a] * rae[b] + ree[a] * ree[b]);
                    }
                }
            }
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (!(max_eig > 0.0) || eig.eigenvalues().minCoeff() < 1e-10 * max_eig)
        throw std::invalid_argument(
            "fit_surrogate: normal system is rank deficient (under-sampled data)");
    const Eigen::VectorXd c =
        eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
        eig.eigenvectors().transpose() * rhs;
    for (int ia = 0; ia < n_az_knots; ++ia)
        for (int ie = 0; ie < n_el_knots; ++ie) s.coef(ia, ie) = c[flat(ia, ie)];
    return s;
}

} // namespace talos

#endif // TALOS_SURROGATE_HPP
