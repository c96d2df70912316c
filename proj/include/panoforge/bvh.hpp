#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/mesh.hpp"

namespace panoforge {

struct RayHit {
    double t = 0.0;
    uint32_t triangle = 0;
    double bary[3] = {0, 0, 0};  // weights of the triangle's three vertices
    bool front_facing = false;   // <face normal, ray dir> < 0
};

namespace detail {

// Moller-Trumbore with a small barycentric slack so rays passing exactly
// through shared edges or vertices still register on a neighboring
// triangle. Ties on t are broken by the smallest triangle index, which
// makes hit selection independent of traversal order.
struct TriIntersector {
    const TriMesh* mesh = nullptr;
    double t_epsilon = 0.0;  // 1e-7 * scene scale
    static constexpr double kBaryEps = 1e-9;

    std::optional<RayHit> intersect(const Vec3& o, const Vec3& d, uint32_t tri_idx) const {
        const auto& tri = mesh->triangles[tri_idx];
        const Vec3& v0 = mesh->vertices[tri[0]];
        const Vec3 e1 = mesh->vertices[tri[1]] - v0;
        const Vec3 e2 = mesh->vertices[tri[2]] - v0;
        const Vec3 p = d.cross(e2);
        const double det = e1.dot(p);
        if (std::abs(det) < 1e-300) return std::nullopt;
        const double inv = 1.0 / det;
        const Vec3 tv = o - v0;
        const double u = tv.dot(p) * inv;
        if (u < -kBaryEps || u > 1.0 + kBaryEps) return std::nullopt;
        const Vec3 q = tv.cross(e1);
        const double v = d.dot(q) * inv;
        if (v < -kBaryEps || u + v > 1.0 + kBaryEps) return std::nullopt;
        const double t = e2.dot(q) * inv;
        if (t <= t_epsilon) return std::nullopt;
        RayHit hit;
        hit.t = t;
        hit.triangle = tri_idx;
        hit.bary[0] = 1.0 - u - v;
        hit.bary[1] = u;
        hit.bary[2] = v;
        hit.front_facing = e1.cross(e2).dot(d) < 0.0;
        return hit;
    }

    static bool better(const RayHit& a, const RayHit& b) {
        return a.t < b.t || (a.t == b.t && a.triangle < b.triangle);
    }
};

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void grow(const Vec3& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    void grow(const Aabb& b) {
        grow(b.lo);
        grow(b.hi);
    }

    // Entry distance along the ray, or nullopt if the slab test fails or
    // lies entirely beyond t_max.
    std::optional<double> hit(const Vec3& o, const Vec3& inv_d, double t_max) const {
        const double lo_[3] = {lo.x, lo.y, lo.z}, hi_[3] = {hi.x, hi.y, hi.z};
        const double o_[3] = {o.x, o.y, o.z}, id[3] = {inv_d.x, inv_d.y, inv_d.z};
        double t0 = 0.0, t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            double ta = (lo_[a] - o_[a]) * id[a];
            double tb = (hi_[a] - o_[a]) * id[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return std::nullopt;
        }
        return t0;
    }
};

}  // namespace detail

inline double mesh_scale(const TriMesh& mesh) {
    detail::Aabb box;
    for (const auto& v : mesh.vertices) box.grow(v);
    return mesh.vertices.empty() ? 1.0 : (box.hi - box.lo).norm();
}

// Exhaustive hit search; the reference the BVH must agree with bit-exactly.
inline std::optional<RayHit> brute_force_raycast(const TriMesh& mesh, const Vec3& origin,
                                                 const Vec3& dir, double t_epsilon) {
    detail::TriIntersector isect{&mesh, t_epsilon};
    std::optional<RayHit> best;
    for (uint32_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto h = isect.intersect(origin, dir, t);
        if (h && (!best || detail::TriIntersector::better(*h, *best))) best = h;
    }
    return best;
}

// Median-split bounding volume hierarchy, leaf size <= 8. Acceleration
// only: hit selection matches brute_force_raycast bit-identically because
// nodes are pruned strictly beyond the current best t and ties fall back
// to the smallest triangle index.
class Bvh {
public:
    explicit Bvh(const TriMesh& mesh) : mesh_(&mesh) {
        t_epsilon_ = 1e-7 * mesh_scale(mesh);
        const size_t n = mesh.triangles.size();
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), uint32_t(0));
        boxes_.resize(n);
        centroids_.resize(n);
        for (size_t t = 0; t < n; ++t) {
            detail::Aabb b;
            for (uint32_t v : mesh.triangles[t]) b.grow(mesh.vertices[v]);
            boxes_[t] = b;
            centroids_[t] = (b.lo + b.hi) * 0.5;
        }
        if (n > 0) build(0, n);
    }

    double t_epsilon() const { return t_epsilon_; }

    std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir) const {
        if (nodes_.empty()) return std::nullopt;
        const Vec3 inv_d{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        detail::TriIntersector isect{mesh_, t_epsilon_};
        std::optional<RayHit> best;
        uint32_t stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const uint32_t ni = stack[--top];
            const Node& node = nodes_[ni];
            const double limit = best ? best->t : std::numeric_limits<double>::infinity();
            if (!node.box.hit(origin, inv_d, limit)) continue;
            if (node.count > 0) {
                for (uint32_t k = 0; k < node.count; ++k) {
                    const auto h = isect.intersect(origin, dir, order_[node.first + k]);
                    if (h && (!best || detail::TriIntersector::better(*h, *best))) best = h;
                }
            } else {
                stack[top++] = node.first;  // right subtree
                stack[top++] = ni + 1;      // left subtree (visited first)
            }
        }
        return best;
    }

private:
    struct Node {
        detail::Aabb box;
        // Leaves: first triangle slot in order_. Inner nodes: index of the
        // right child (the left child always sits at parent index + 1).
        uint32_t first = 0;
        uint32_t count = 0;  // 0 for inner nodes
    };

    uint32_t build(size_t begin, size_t end) {
        Node node;
        for (size_t k = begin; k < end; ++k) node.box.grow(boxes_[order_[k]]);
        const uint32_t idx = uint32_t(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= 8) {
            nodes_[idx].first = uint32_t(begin);
            nodes_[idx].count = uint32_t(end - begin);
            return idx;
        }
        detail::Aabb cbox;
        for (size_t k = begin; k < end; ++k) cbox.grow(centroids_[order_[k]]);
        const Vec3 span = cbox.hi - cbox.lo;
        const int axis = span.x >= span.y ? (span.x >= span.z ? 0 : 2) : (span.y >= span.z ? 1 : 2);
        const size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](uint32_t a, uint32_t b) {
                             const double ca = axis == 0   ? centroids_[a].x
                                               : axis == 1 ? centroids_[a].y
                                                           : centroids_[a].z;
                             const double cb = axis == 0   ? centroids_[b].x
                                               : axis == 1 ? centroids_[b].y
                                                           : centroids_[b].z;
                             return ca < cb || (ca == cb && a < b);
                         });
        build(begin, mid);  // left child lands at idx + 1
        const uint32_t right = build(mid, end);
        nodes_[idx].first = right;
        nodes_[idx].count = 0;
        return idx;
    }

    const TriMesh* mesh_;
    double t_epsilon_ = 0.0;
    std::vector<uint32_t> order_;
    std::vector<detail::Aabb> boxes_;
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
};

}  // namespace panoforge
