#pragma once

#include <cmath>
#include <utility>

#include "panoforge/common.hpp"
#include "panoforge/erp.hpp"
#include "panoforge/panomap.hpp"

namespace panoforge {

// Perspective camera with square pixels. At yaw = pitch = roll = 0 it
// looks along +x with +z up; positive yaw turns toward +y (increasing
// longitude), positive pitch tilts up.
struct PinholeCamera {
    double horizontal_fov = kPi / 2.0;  // radians, in (0, pi)
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (!(horizontal_fov > 0.0) || !(horizontal_fov < kPi))
            throw DataError("camera fov must lie strictly inside (0, pi)");
        if (width <= 0 || height <= 0) throw DataError("camera dimensions must be positive");
    }

    double focal_pixels() const { return (width / 2.0) / std::tan(horizontal_fov / 2.0); }
    double tan_half_hfov() const { return std::tan(horizontal_fov / 2.0); }
    double tan_half_vfov() const { return tan_half_hfov() * height / double(width); }

    Vec3 forward() const {
        const double cp = std::cos(pitch);
        return {cp * std::cos(yaw), cp * std::sin(yaw), std::sin(pitch)};
    }
    Vec3 right() const {
        const Vec3 r0{-std::sin(yaw), std::cos(yaw), 0.0};
        const Vec3 u0 = forward().cross(r0);
        return r0 * std::cos(roll) + u0 * std::sin(roll);
    }
    Vec3 up() const {
        const Vec3 r0{-std::sin(yaw), std::cos(yaw), 0.0};
        const Vec3 u0 = forward().cross(r0);
        return u0 * std::cos(roll) - r0 * std::sin(roll);
    }

    // Ray through image pixel center (x+0.5, y+0.5); rows grow downward.
    Vec3 pixel_ray(double x, double y) const {
        const double a = x - width / 2.0;
        const double b = y - height / 2.0;
        return (forward() * focal_pixels() + right() * a - up() * b).normalized();
    }
};

// Bilinear lookup at continuous pano coords; longitude wraps modulo W,
// latitude clamps at the poles.
inline float sample_bilinear(const PanoMap& map, double u, double v, int ch) {
    const int w = map.width(), h = map.height();
    double x = u - 0.5;
    double y = std::clamp(v - 0.5, 0.0, double(h - 1));
    x = std::fmod(x, double(w));
    if (x < 0.0) x += double(w);
    const int i0 = int(std::floor(x));
    const int j0 = int(std::floor(y));
    const int i1 = (i0 + 1) % w;
    const int j1 = std::min(j0 + 1, h - 1);
    const double fx = x - std::floor(x);
    const double fy = y - std::floor(y);
    const double top = map.at(j0, i0, ch) * (1.0 - fx) + map.at(j0, i1, ch) * fx;
    const double bot = map.at(j1, i0, ch) * (1.0 - fx) + map.at(j1, i1, ch) * fx;
    return float(top * (1.0 - fy) + bot * fy);
}

inline float sample_nearest(const PanoMap& map, double u, double v, int ch) {
    const int w = map.width(), h = map.height();
    int i = int(std::floor(std::fmod(u, double(w))));
    if (i < 0) i += w;
    const int j = std::clamp(int(std::floor(v)), 0, h - 1);
    return map.at(j, i, ch);
}

// Projects a perspective image onto an empty panorama. Returns the masked
// panorama plus the binary coverage mask; the mask depends only on the
// camera and pano geometry, never on image content.
inline std::pair<PanoMap, PanoMap> project_to_pano(const PanoMap& image,
                                                   const PinholeCamera& cam, int pano_w,
                                                   int pano_h) {
    cam.validate();
    if (pano_w != 2 * pano_h) throw DataError("project_to_pano: pano must be 2:1");
    if (image.width() != cam.width || image.height() != cam.height)
        throw DataError("project_to_pano: image does not match camera dimensions");

    PanoMap pano(pano_w, pano_h, image.modality(), image.channels());
    PanoMap mask(pano_w, pano_h, Modality::Mask);

    const Vec3 f = cam.forward(), r = cam.right(), u = cam.up();
    const double thh = cam.tan_half_hfov(), thv = cam.tan_half_vfov();
    const double focal = cam.focal_pixels();

    parallel_rows(pano_h, [&](int j) {
        for (int i = 0; i < pano_w; ++i) {
            const Vec3 d = pixel_to_direction(i + 0.5, j + 0.5, pano_w, pano_h);
            const double df = d.dot(f);
            if (df <= 0.0) continue;
            const double dr = d.dot(r), du = d.dot(u);
            if (std::abs(dr) > df * thh || std::abs(du) > df * thv) continue;
            const double x = cam.width / 2.0 + focal * dr / df;
            const double y = cam.height / 2.0 - focal * du / df;
            mask.at(j, i) = 1.0f;
            for (int ch = 0; ch < image.channels(); ++ch)
                pano.at(j, i, ch) = image.channels() == 1 && image.modality() == Modality::Mask
                                        ? sample_nearest(image, x, y, ch)
                                        : sample_bilinear(image, x, y, ch);
        }
    });
    return {std::move(pano), std::move(mask)};
}

// Renders a perspective view from a panorama (wrap-aware bilinear lookup;
// nearest-neighbor for masks so they stay binary).
inline PanoMap pano_to_perspective(const PanoMap& pano, const PinholeCamera& cam) {
    cam.validate();
    PanoMap out(cam.width, cam.height, pano.modality(), pano.channels());
    const bool nearest = pano.modality() == Modality::Mask;
    parallel_rows(cam.height, [&](int y) {
        for (int x = 0; x < cam.width; ++x) {
            const Vec3 d = cam.pixel_ray(x + 0.5, y + 0.5);
            const auto [pu, pv] = direction_to_pixel(d, pano.width(), pano.height());
            for (int ch = 0; ch < pano.channels(); ++ch)
                out.at(y, x, ch) = nearest ? sample_nearest(pano, pu, pv, ch)
                                           : sample_bilinear(pano, pu, pv, ch);
        }
    });
    return out;
}

// Circular column shift; roll_columns(roll_columns(p, s), -s) is bit-exact.
inline PanoMap roll_columns(const PanoMap& pano, int shift) {
    const int w = pano.width(), h = pano.height();
    int s = shift % w;
    if (s < 0) s += w;
    PanoMap out(w, h, pano.modality(), pano.channels());
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const int dst = (i + s) % w;
            for (int ch = 0; ch < pano.channels(); ++ch)
                out.at(j, dst, ch) = pano.at(j, i, ch);
            out.validity()[size_t(j) * w + dst] = pano.validity()[size_t(j) * w + i];
        }
    }
    return out;
}

// Horizontal seam blending. The 2K columns around the wrap seam are
// rewritten as a linear crossfade between the two circular continuations
// of the content; the excess jump J is the seam difference minus the local
// slope estimated from the adjacent columns, so wrap-continuous inputs
// pass through unchanged and the op is idempotent.
inline PanoMap seam_blend(const PanoMap& pano, int band) {
    const int w = pano.width(), h = pano.height();
    if (band < 1 || band > w / 4) throw DataError("seam_blend: band must be in [1, W/4]");
    PanoMap out = pano;
    for (int j = 0; j < h; ++j) {
        for (int ch = 0; ch < pano.channels(); ++ch) {
            const double p0 = pano.at(j, 0, ch);
            const double p1 = pano.at(j, 1, ch);
            const double pw1 = pano.at(j, w - 1, ch);
            const double pw2 = pano.at(j, w - 2, ch);
            const double d_seam = p0 - pw1;
            const double d_expect = 0.5 * ((p1 - p0) + (pw1 - pw2));
            const double jump = d_seam - d_expect;
            if (jump == 0.0) continue;
            for (int t = 0; t < 2 * band; ++t) {
                const double wgt = (t + 0.5) / (2.0 * band);
                if (t < band) {
                    const int col = w - band + t;
                    out.at(j, col, ch) = float(pano.at(j, col, ch) + wgt * jump);
                } else {
                    const int col = t - band;
                    out.at(j, col, ch) = float(pano.at(j, col, ch) - (1.0 - wgt) * jump);
                }
            }
        }
    }
    return out;
}

}  // namespace panoforge
