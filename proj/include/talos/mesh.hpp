#ifndef TALOS_MESH_HPP
#define TALOS_MESH_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "talos/types.hpp"

namespace talos {

// Body-frame triangle soup in meters. Normals follow the vertex winding
// (right-hand rule); panel_flags marks the solar-array triangles.
struct TriangleMesh {
    struct Triangle {
        int a = 0, b = 0, c = 0;
    };

    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<bool> panel_flags;

    Vec3 vertex(int i) const { return vertices.at(static_cast<std::size_t>(i)); }

    Vec3 face_normal_unnormalized(std::size_t t) const {
        const auto& tri = triangles[t];
        return (vertex(tri.b) - vertex(tri.a)).cross(vertex(tri.c) - vertex(tri.a));
    }

    double face_area(std::size_t t) const { return 0.5 * face_normal_unnormalized(t).norm(); }

    void validate() const {
        if (triangles.size() != panel_flags.size())
            throw std::invalid_argument("TriangleMesh: panel_flags size mismatch");
        bool any_panel = false;
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            const auto& tri = triangles[t];
            const int nv = static_cast<int>(vertices.size());
            if (tri.a < 0 || tri.a >= nv || tri.b < 0 || tri.b >= nv || tri.c < 0 || tri.c >= nv)
                throw std::invalid_argument("TriangleMesh: vertex index out of range at triangle " +
                                            std::to_string(t));
            if (!(face_area(t) > 0.0))
                throw std::invalid_argument("TriangleMesh: degenerate triangle " + std::to_string(t));
            any_panel = any_panel || panel_flags[t];
        }
        if (!any_panel) throw std::invalid_argument("TriangleMesh: no panel triangles flagged");
    }
};

// ASCII STL reader. Vertices are kept per-facet (no welding); panel flags
// default to false until a sidecar is applied.
inline TriangleMesh load_ascii_stl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_ascii_stl: cannot open " + path);
    TriangleMesh mesh;
    std::string tok;
    std::vector<Vec3> facet;
    while (in >> tok) {
        if (tok == "vertex") {
            Vec3 v;
            if (!(in >> v.x() >> v.y() >> v.z()))
                throw std::invalid_argument("load_ascii_stl: malformed vertex in " + path);
            facet.push_back(v);
        } else if (tok == "endfacet") {
            if (facet.size() != 3)
                throw std::invalid_argument("load_ascii_stl: facet without 3 vertices in " + path);
            const int base = static_cast<int>(mesh.vertices.size());
            mesh.vertices.insert(mesh.vertices.end(), facet.begin(), facet.end());
            mesh.triangles.push_back({base, base + 1, base + 2});
            facet.clear();
        }
    }
    if (mesh.triangles.empty())
        throw std::invalid_argument("load_ascii_stl: no facets found in " + path);
    mesh.panel_flags.assign(mesh.triangles.size(), false);
    return mesh;
}

// Sidecar format: one triangle index per line, '#' comments allowed.
inline void apply_panel_sidecar(TriangleMesh& mesh, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("panel sidecar not found: " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long idx;
        while (ls >> idx) {
            if (idx < 0 || idx >= static_cast<long>(mesh.triangles.size()))
                throw std::invalid_argument("panel sidecar: triangle index out of range: " +
                                         std::to_string(idx));
            mesh.panel_flags[static_cast<std::size_t>(idx)] = true;
        }
    }
}

inline TriangleMesh load_mesh_with_panels(const std::string& stl_path,
                                          const std::string& sidecar_path) {
    TriangleMesh mesh = load_ascii_stl(stl_path);
    apply_panel_sidecar(mesh, sidecar_path);
    mesh.validate();
    return mesh;
}

} // namespace talos

#endif // TALOS_MESH_HPP
