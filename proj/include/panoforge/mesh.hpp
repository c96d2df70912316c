#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/erp.hpp"
#include "panoforge/panomap.hpp"

namespace panoforge {

// Unprojected pano pixels; one candidate vertex per pixel.
struct VertexGrid {
    int width = 0;
    int height = 0;
    std::vector<Vec3> positions;   // row-major
    std::vector<uint8_t> present;  // 0 where the source pixel was invalid
    Vec3 origin;

    const Vec3& at(int row, int col) const { return positions[size_t(row) * width + col]; }
    bool has(int row, int col) const { return present[size_t(row) * width + col] != 0; }
};

// vertex = origin + distance * ray(pixel center).
inline VertexGrid unproject(const PanoMap& distance, const Vec3& origin) {
    if (distance.modality() != Modality::Distance)
        throw DataError("unproject expects a Distance map");
    const int w = distance.width(), h = distance.height();
    VertexGrid grid;
    grid.width = w;
    grid.height = h;
    grid.origin = origin;
    grid.positions.resize(size_t(w) * h);
    grid.present.resize(size_t(w) * h, 0);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!distance.valid(j, i)) continue;
            const Vec3 d = pixel_to_direction(i + 0.5, j + 0.5, w, h);
            grid.positions[size_t(j) * w + i] = origin + d * double(distance.at(j, i));
            grid.present[size_t(j) * w + i] = 1;
        }
    }
    return grid;
}

// Indexed triangle mesh. src_col may equal pano width for the duplicated
// seam column so UVs never wrap; triangles wind counter-clockwise as seen
// from the camera origin (face normals point back at the camera).
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<double, 2>> uvs;
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<int> src_col;  // per vertex, 0..W (W = seam duplicate)
    std::vector<int> src_row;  // per vertex, 0..H-1
    int pano_width = 0;
    int pano_height = 0;
    Vec3 origin;
    size_t rejected_triangles = 0;

    Vec3 face_normal(size_t t) const {
        const auto& tri = triangles[t];
        const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
        const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
        return e1.cross(e2);
    }

    Vec3 face_centroid(size_t t) const {
        const auto& tri = triangles[t];
        return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
    }
};

// Connects pixel neighbors into two triangles per quad (with column
// wrap-around) and cuts depth discontinuities: a triangle is rejected when
// the max/min ratio of its corner distances exceeds tau or any corner
// pixel is invalid. Seam quads reference duplicated column-0 vertices.
inline TriMesh triangulate(const VertexGrid& grid, const PanoMap& distance, double tau) {
    if (!(tau > 1.0)) throw DataError("triangulate: tau must exceed 1");
    if (grid.width != distance.width() || grid.height != distance.height())
        throw DataError("triangulate: grid and distance dimensions differ");
    const int w = grid.width, h = grid.height;

    TriMesh mesh;
    mesh.pano_width = w;
    mesh.pano_height = h;
    mesh.origin = grid.origin;

    // Lazily allocated vertices over columns 0..w (w = seam duplicate of 0).
    std::vector<uint32_t> index(size_t(h) * (w + 1), UINT32_MAX);
    auto vertex_for = [&](int row, int col) -> uint32_t {
        uint32_t& slot = index[size_t(row) * (w + 1) + col];
        if (slot == UINT32_MAX) {
            slot = uint32_t(mesh.vertices.size());
            mesh.vertices.push_back(grid.at(row, col % w));
            mesh.src_col.push_back(col);
            mesh.src_row.push_back(row);
        }
        return slot;
    };

    auto corner_ok = [&](int row, int col) { return grid.has(row, col % w); };
    auto dist_at = [&](int row, int col) { return double(distance.at(row, col % w)); };

    auto try_triangle = [&](std::array<std::array<int, 2>, 3> corners) {
        double dmin = 1e300, dmax = 0.0;
        for (const auto& [row, col] : corners) {
            if (!corner_ok(row, col)) {
                ++mesh.rejected_triangles;
                return;
            }
            const double d = dist_at(row, col);
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (dmax / dmin > tau) {
            ++mesh.rejected_triangles;
            return;
        }
        std::array<uint32_t, 3> tri{vertex_for(corners[0][0], corners[0][1]),
                                    vertex_for(corners[1][0], corners[1][1]),
                                    vertex_for(corners[2][0], corners[2][1])};
        const Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        const Vec3 n = e1.cross(e2);
        if (n.norm() * 0.5 <= 1e-12) {  // degenerate sliver
            ++mesh.rejected_triangles;
            return;
        }
        const Vec3 centroid =
            (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
        if (n.dot(centroid - grid.origin) > 0.0) std::swap(tri[1], tri[2]);
        mesh.triangles.push_back(tri);
    };

    for (int j = 0; j + 1 < h; ++j) {
        for (int i = 0; i < w; ++i) {
            // quad corners: (j,i) (j,i+1) / (j+1,i) (j+1,i+1), i+1 may be w
            try_triangle({{{j, i}, {j + 1, i}, {j, i + 1}}});
            try_triangle({{{j, i + 1}, {j + 1, i}, {j + 1, i + 1}}});
        }
    }
    return mesh;
}

// Longitude/latitude texture coordinates from the source pixel of each
// vertex; duplicated seam vertices take u = 1 so no triangle wraps.
inline TriMesh& spherical_uv(TriMesh& mesh) {
    const double w = mesh.pano_width, h = mesh.pano_height;
    mesh.uvs.resize(mesh.vertices.size());
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        const int col = mesh.src_col[v];
        const double u = col == mesh.pano_width ? 1.0 : (col + 0.5) / w;
        mesh.uvs[v] = {u, 1.0 - (mesh.src_row[v] + 0.5) / h};
    }
    return mesh;
}

// Convenience: distance map -> UV-mapped mesh in one call.
inline TriMesh reconstruct_mesh(const PanoMap& distance, const Vec3& origin, double tau) {
    VertexGrid grid = unproject(distance, origin);
    TriMesh mesh = triangulate(grid, distance, tau);
    spherical_uv(mesh);
    return mesh;
}

}  // namespace panoforge
