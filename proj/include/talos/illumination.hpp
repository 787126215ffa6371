#ifndef TALOS_ILLUMINATION_HPP
#define TALOS_ILLUMINATION_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "talos/mesh.hpp"
#include "talos/types.hpp"

namespace talos {

struct IlluminationSample {
    double azimuth = 0.0;              // [rad], in [0, 2pi)
    double elevation = 0.0;            // [rad], in [-pi/2, pi/2]
    double illuminated_fraction = 0.0; // lit panel area / total panel area
};

// Unit vector toward the sun for given azimuth/elevation.
inline Vec3 sun_direction(double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return Vec3(ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation));
}

namespace detail {

// Moller-Trumbore ray/triangle intersection, any hit with t > t_min.
inline bool ray_hits_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0,
                              const Vec3& v1, const Vec3& v2, double t_min) {
    constexpr double eps = 1e-12;
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < eps) return false;
    const double inv_det = 1.0 / det;
    const Vec3 s = origin - v0;
    const double u = s.dot(p) * inv_det;
    if (u < -1e-12 || u > 1.0 + 1e-12) return false;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv_det;
    if (v < -1e-12 || u + v > 1.0 + 1e-12) return false;
    const double t = e2.dot(q) * inv_det;
    return t > t_min;
}

// Deterministic stratified sample points: the triangle is subdivided into
// g^2 congruent subtriangles and their centroids are used. g = ceil(sqrt(s))
// so at least `s` points are produced.
inline std::vector<Vec3> triangle_sample_points(const Vec3& a, const Vec3& b, const Vec3& c,
                                                int samples) {
    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(samples))));
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(g) * g);
    // Row i has 2i+1 subtriangles: i+1 upright, i inverted.
    const Vec3 eb = (b - a) / g;
    const Vec3 ec = (c - a) / g;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j <= i; ++j) {
            // upright: corners a + (i-j) eb + j ec, +eb, +ec
            pts.push_back(a + (i - j + 1.0 / 3.0) * eb + (j + 1.0 / 3.0) * ec);
            if (j < i)  // inverted neighbour
                pts.push_back(a + (i - j - 1.0 / 3.0) * eb + (j + 2.0 / 3.0) * ec);
        }
    }
    return pts;
}

} // namespace detail

// Fraction of total panel area lit from sun direction (azimuth, elevation).
// A sample point is lit iff its triangle faces the sun and the ray toward
// the sun clears every other triangle. Parallel rays (sun at infinity).
inline double ray_trace_illumination(const TriangleMesh& mesh, double azimuth, double elevation,
                                     int samples_per_triangle) {
    if (samples_per_triangle < 1)
        throw std::invalid_argument("ray_trace_illumination: samples_per_triangle must be >= 1");
    mesh.validate();

    const Vec3 s = sun_direction(azimuth, elevation);
    constexpr double ray_offset = 1e-9;  // [m], lifts the origin off its own facet

    double panel_area = 0.0;
    double lit_area = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!mesh.panel_flags[t]) continue;
        const double area = mesh.face_area(t);
        panel_area += area;

        const Vec3 n = mesh.face_normal_unnormalized(t);
        if (n.dot(s) <= 0.0) continue;  // back-face: fully dark

        const auto& tri = mesh.triangles[t];
        const Vec3 a = mesh.vertex(tri.a), b = mesh.vertex(tri.b), c = mesh.vertex(tri.c);
        const auto pts = detail::triangle_sample_points(a, b, c, samples_per_triangle);
        int lit = 0;
        for (const Vec3& p : pts) {
            const Vec3 origin = p + ray_offset * s;
            bool occluded = false;
            for (std::size_t o = 0; o < mesh.triangles.size() && !occluded; ++o) {
                if (o == t) continue;
                const auto& to = mesh.triangles[o];
                occluded = detail::ray_hits_triangle(origin, s, mesh.vertex(to.a),
                                                     mesh.vertex(to.b), mesh.vertex(to.c), 1e-12);
            }
            if (!occluded) ++lit;
        }
        lit_area += area * static_cast<double>(lit) / static_cast<double>(pts.size());
    }
    return lit_area / panel_area;
}

// Uniform azimuth x elevation sweep, azimuth-major ordering starting at
// (0, -pi/2). Azimuth spacing is 2pi/n_az (period not duplicated);
// elevation spans [-pi/2, pi/2] inclusive.
inline std::vector<IlluminationSample> generate_training_grid(const TriangleMesh& mesh, int n_az,
                                                              int n_el,
                                                              int samples_per_triangle) {
    if (n_az < 4) throw std::invalid_argument("generate_training_grid: n_az must be >= 4");
    if (n_el < 3) throw std::invalid_argument("generate_training_grid: n_el must be >= 3");
    std::vector<IlluminationSample> out;
    out.reserve(static_cast<std::size_t>(n_az) * n_el);
    for (int i = 0; i < n_az; ++i) {
        const double az = 2.0 * kPi * i / n_az;
        for (int j = 0; j < n_el; ++j) {
            const double el = -0.5 * kPi + kPi * j / (n_el - 1);
            out.push_back({az, el, ray_trace_illumination(mesh, az, el, samples_per_triangle)});
        }
    }
    return out;
}

} // namespace talos

#endif // TALOS_ILLUMINATION_HPP
