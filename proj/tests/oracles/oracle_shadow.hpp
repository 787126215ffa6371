#ifndef TALOS_TESTS_ORACLE_SHADOW_HPP
#define TALOS_TESTS_ORACLE_SHADOW_HPP

// Exact shadow-projection oracle for axis-aligned rectangle scenes: a
// rectangular plate in the z = 0 plane lit from +z, occluded by rectangles
// at positive z. The lit fraction is 1 - (covered area) / (plate area),
// by rectangle intersection arithmetic.

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Rect {  // axis-aligned, [x0, x1] x [y0, y1]
    double x0, x1, y0, y1;
    double area() const { return (x1 - x0) * (y1 - y0); }
};

// Exact lit fraction of `plate` with non-overlapping occluder footprints.
inline double lit_fraction(const Rect& plate, const std::vector<Rect>& occluders) {
    if (!(plate.area() > 0.0)) throw std::invalid_argument("lit_fraction: empty plate");
    double covered = 0.0;
    for (std::size_t i = 0; i < occluders.size(); ++i) {
        const Rect& o = occluders[i];
        const double w = std::max(0.0, std::min(plate.x1, o.x1) - std::max(plate.x0, o.x0));
        const double h = std::max(0.0, std::min(plate.y1, o.y1) - std::max(plate.y0, o.y0));
        covered += w * h;
        for (std::size_t j = i + 1; j < occluders.size(); ++j) {
            const Rect& p = occluders[j];
            const bool overlap = std::min(o.x1, p.x1) > std::max(o.x0, p.x0) &&
                                 std::min(o.y1, p.y1) > std::max(o.y0, p.y0);
            if (overlap)
                throw std::invalid_argument("lit_fraction: occluder footprints must not overlap");
        }
    }
    return 1.0 - covered / plate.area();
}

} // namespace oracle

#endif
