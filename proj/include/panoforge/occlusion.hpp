#pragma once

#include <cmath>
#include <vector>

#include "panoforge/bvh.hpp"
#include "panoforge/common.hpp"
#include "panoforge/erp.hpp"
#include "panoforge/mesh.hpp"
#include "panoforge/panomap.hpp"

// Occlusion-aware mask sampling: reconstruct the mesh implied by a
// panoramic distance map, step the camera by a 3D displacement, and mark
// every target pixel whose ray misses the mesh or lands on a back face.
// Those pixels are scene content the original panorama never observed.

namespace panoforge {

struct DisplacementSampler {
    uint64_t seed = 0;
    double max_fraction = 0.3;       // rho
    double distance_percentile = 0.1;  // p

    void validate() const {
        if (!(max_fraction > 0.0) || !(max_fraction < 1.0))
            throw DataError("displacement max_fraction must lie in (0, 1)");
        if (!(distance_percentile > 0.0) || !(distance_percentile < 1.0))
            throw DataError("displacement percentile must lie in (0, 1)");
    }
};

// Linear-interpolated order statistic of the valid distances.
inline double distance_quantile(const PanoMap& distance, double p) {
    std::vector<float> vals;
    vals.reserve(distance.data().size());
    for (int j = 0; j < distance.height(); ++j)
        for (int i = 0; i < distance.width(); ++i)
            if (distance.valid(j, i)) vals.push_back(distance.at(j, i));
    if (vals.empty()) throw DataError("distance map has no valid pixels");
    std::sort(vals.begin(), vals.end());
    const double idx = p * double(vals.size() - 1);
    const size_t lo = size_t(std::floor(idx));
    const size_t hi = std::min(lo + 1, vals.size() - 1);
    const double frac = idx - double(lo);
    return double(vals[lo]) * (1.0 - frac) + double(vals[hi]) * frac;
}

// Direction uniform on the sphere, magnitude uniform in (0, rho * Q]
// where Q is the p-quantile of the valid distances. Deterministic for a
// fixed seed.
inline Vec3 sample_displacement(const DisplacementSampler& sampler, const PanoMap& distance) {
    sampler.validate();
    const double q = distance_quantile(distance, sampler.distance_percentile);
    Xoshiro256 rng(sampler.seed);
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir{r * std::cos(phi), r * std::sin(phi), z};
    const double magnitude = sampler.max_fraction * q * (1.0 - rng.uniform());
    return dir * magnitude;
}

struct WarpResult {
    std::vector<PanoMap> warped;  // one per requested source map
    PanoMap mask;                 // 1 = occluded/hole, 0 = visible
    std::vector<RayHit> hits;     // per pixel; meaningful where mask == 0
    std::vector<uint8_t> hit_ok;  // per pixel
    double mask_fraction = 0.0;
};

namespace detail {

inline void require_displacement_inside(const PanoMap& distance, const Vec3& displacement) {
    double dmin = 1e300;
    bool any = false;
    for (int j = 0; j < distance.height(); ++j)
        for (int i = 0; i < distance.width(); ++i)
            if (distance.valid(j, i)) {
                dmin = std::min(dmin, double(distance.at(j, i)));
                any = true;
            }
    if (!any) throw DataError("distance map has no valid pixels");
    if (displacement.norm() >= dmin)
        throw DataError("displacement exits the scene surface (|d| >= nearest distance)");
}

}  // namespace detail

// Ray-casts the reconstructed mesh from origin + displacement. mask = 0
// iff the nearest hit is front-facing; misses and back-face hits are
// holes. The BVH is acceleration only; results equal brute-force
// intersection bit-exactly.
inline WarpResult compute_mask(const PanoMap& distance, const Vec3& displacement, double tau,
                               bool brute_force = false) {
    detail::require_displacement_inside(distance, displacement);
    const int w = distance.width(), h = distance.height();
    const TriMesh mesh = reconstruct_mesh(distance, {0, 0, 0}, tau);

    WarpResult result{{}, PanoMap(w, h, Modality::Mask), {}, {}, 0.0};
    result.hits.resize(size_t(w) * h);
    result.hit_ok.assign(size_t(w) * h, 0);

    const Vec3 origin = displacement;
    const Bvh bvh(mesh);
    parallel_rows(h, [&](int j) {
        for (int i = 0; i < w; ++i) {
            const Vec3 dir = pixel_to_direction(i + 0.5, j + 0.5, w, h);
            const auto hit = brute_force ? brute_force_raycast(mesh, origin, dir, bvh.t_epsilon())
                                         : bvh.raycast(origin, dir);
            const size_t k = size_t(j) * w + i;
            if (hit && hit->front_facing) {
                result.hits[k] = *hit;
                result.hit_ok[k] = 1;
                result.mask.at(j, i) = 0.0f;
            } else {
                result.mask.at(j, i) = 1.0f;
            }
        }
    });

    size_t masked = 0;
    for (size_t k = 0; k < result.hit_ok.size(); ++k) masked += result.hit_ok[k] ? 0 : 1;
    result.mask_fraction = double(masked) / double(size_t(w) * h);
    return result;
}

// Warps source maps to the displaced viewpoint. Visible pixels carry
// barycentric-interpolated source values (nearest-vertex for Mask inputs);
// Distance is view-dependent and becomes the ray-cast hit distance from
// the new origin. Masked pixels are zeroed.
inline WarpResult warp_pano(const std::vector<const PanoMap*>& sources, const PanoMap& distance,
                            const Vec3& displacement, double tau) {
    for (const PanoMap* s : sources)
        if (s->width() != distance.width() || s->height() != distance.height())
            throw DataError("warp_pano: source maps must align with the distance map");

    WarpResult result = compute_mask(distance, displacement, tau);
    const TriMesh mesh = reconstruct_mesh(distance, {0, 0, 0}, tau);
    const int w = distance.width(), h = distance.height();

    for (const PanoMap* src : sources) {
        PanoMap out(w, h, src->modality(), src->channels());
        const bool nearest = src->modality() == Modality::Mask;
        const bool is_distance = src->modality() == Modality::Distance;
        parallel_rows(h, [&](int j) {
            for (int i = 0; i < w; ++i) {
                const size_t k = size_t(j) * w + i;
                if (!result.hit_ok[k]) {
                    out.set_valid(j, i, false);
                    continue;
                }
                const RayHit& hit = result.hits[k];
                if (is_distance) {
                    out.at(j, i) = float(hit.t);
                    continue;
                }
                const auto& tri = mesh.triangles[hit.triangle];
                if (nearest) {
                    int best = 0;
                    for (int c = 1; c < 3; ++c)
                        if (hit.bary[c] > hit.bary[best]) best = c;
                    const uint32_t v = tri[best];
                    for (int ch = 0; ch < src->channels(); ++ch)
                        out.at(j, i, ch) = src->at(mesh.src_row[v], mesh.src_col[v] % w, ch);
                } else {
                    for (int ch = 0; ch < src->channels(); ++ch) {
                        double acc = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            const uint32_t v = tri[c];
                            acc += hit.bary[c] *
                                   double(src->at(mesh.src_row[v], mesh.src_col[v] % w, ch));
                        }
                        out.at(j, i, ch) = float(acc);
                    }
                }
            }
        });
        result.warped.push_back(std::move(out));
    }
    return result;
}

}  // namespace panoforge
