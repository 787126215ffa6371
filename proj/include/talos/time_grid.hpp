#ifndef TALOS_TIME_GRID_HPP
#define TALOS_TIME_GRID_HPP

#include <cstdint>
#include <stdexcept>

namespace talos {

// Uniform time grid with points t0 + i*dt for i in 0..n.
// n is the number of steps; a grid holds n+1 points. n = 0 is the
// degenerate single-point grid.
struct TimeGrid {
    double t0 = 0.0;       // epoch [s]
    double dt = 1.0;       // step [s]
    std::int64_t n = 1;    // number of steps

    TimeGrid() = default;
    TimeGrid(double t0_, double dt_, std::int64_t n_) : t0(t0_), dt(dt_), n(n_) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
        if (n < 0) throw std::invalid_argument("TimeGrid: n must be >= 0");
    }

    double time(std::int64_t i) const { return t0 + static_cast<double>(i) * dt; }
    double t_end() const { return time(n); }
    double duration() const { return static_cast<double>(n) * dt; }

    bool operator==(const TimeGrid& o) const {
        return t0 == o.t0 && dt == o.dt && n == o.n;
    }
};

} // namespace talos

#endif // TALOS_TIME_GRID_HPP
