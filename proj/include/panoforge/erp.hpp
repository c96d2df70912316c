#pragma once

#include <cmath>
#include <utility>

#include "panoforge/common.hpp"
#include "panoforge/panomap.hpp"

// Equirectangular camera model. Convention (fixed project-wide):
// right-handed, z-up, longitude phi = 2*pi*u/W - pi so that phi = 0 maps
// to +x, latitude theta = pi/2 - pi*v/H so that the top row is the +z pole.

namespace panoforge {

// Continuous pixel coords -> unit direction. u wraps modulo W (seam
// continuity); v outside [0, H] is an error.
inline Vec3 pixel_to_direction(double u, double v, int width, int height) {
    if (v < 0.0 || v > double(height))
        throw DataError("pixel row out of range: v=" + std::to_string(v));
    u = std::fmod(u, double(width));
    if (u < 0.0) u += double(width);
    const double phi = 2.0 * kPi * u / double(width) - kPi;
    const double theta = kPi / 2.0 - kPi * v / double(height);
    const double ct = std::cos(theta);
    return {ct * std::cos(phi), ct * std::sin(phi), std::sin(theta)};
}

// Inverse mapping. At the poles (x = y = 0) any u is valid; u = W/2 is
// returned so the op stays a function. Zero vector is an error.
inline std::pair<double, double> direction_to_pixel(const Vec3& d, int width, int height) {
    const double n = d.norm();
    if (n == 0.0) throw DataError("direction_to_pixel: zero vector");
    const double theta = std::asin(std::clamp(d.z / n, -1.0, 1.0));
    const double v = (kPi / 2.0 - theta) * double(height) / kPi;
    if (d.x == 0.0 && d.y == 0.0) return {double(width) / 2.0, v};
    const double phi = std::atan2(d.y, d.x);
    double u = (phi + kPi) * double(width) / (2.0 * kPi);
    if (u >= double(width)) u -= double(width);
    return {u, v};
}

struct RayMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> directions;  // row-major

    const Vec3& at(int row, int col) const { return directions[size_t(row) * width + col]; }
};

// Per-pixel rays at pixel centers (i+0.5, j+0.5). Deterministic.
inline RayMap make_ray_map(int width, int height) {
    if (width != 2 * height) throw DataError("make_ray_map: width must equal 2*height");
    if (height < 2) throw DataError("make_ray_map: height must be >= 2");
    RayMap rm;
    rm.width = width;
    rm.height = height;
    rm.directions.resize(size_t(width) * height);
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i)
            rm.directions[size_t(j) * width + i] =
                pixel_to_direction(i + 0.5, j + 0.5, width, height);
    return rm;
}

// Euclidean distance along the ray -> depth along view_axis. Pixels whose
// ray points away from the axis (nonpositive cosine) become invalid.
inline PanoMap distance_to_planar_depth(const PanoMap& distance, const Vec3& view_axis) {
    if (distance.modality() != Modality::Distance)
        throw DataError("distance_to_planar_depth expects a Distance map");
    const Vec3 axis = view_axis.normalized();
    const int w = distance.width(), h = distance.height();
    PanoMap out(w, h, Modality::Distance);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!distance.valid(j, i)) {
                out.set_valid(j, i, false);
                continue;
            }
            const double c = pixel_to_direction(i + 0.5, j + 0.5, w, h).dot(axis);
            if (c <= 0.0)
                out.set_valid(j, i, false);
            else
                out.at(j, i) = float(distance.at(j, i) * c);
        }
    }
    return out;
}

// Roughness/metallic packed into a 3-channel raster with a zero third
// channel, the layout three-channel image backbones expect.
inline PanoMap pack_materials(const PanoMap& roughness, const PanoMap& metallic) {
    if (roughness.channels() != 1 || metallic.channels() != 1)
        throw DataError("pack_materials expects single-channel inputs");
    if (roughness.width() != metallic.width() || roughness.height() != metallic.height())
        throw DataError("pack_materials: dimension mismatch");
    const int w = roughness.width(), h = roughness.height();
    PanoMap out(w, h, Modality::RGB, 3);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const bool v = roughness.valid(j, i) && metallic.valid(j, i);
            if (!v) {
                out.set_valid(j, i, false);
                continue;
            }
            out.at(j, i, 0) = roughness.at(j, i);
            out.at(j, i, 1) = metallic.at(j, i);
            out.at(j, i, 2) = 0.0f;
        }
    }
    return out;
}

inline std::pair<PanoMap, PanoMap> unpack_materials(const PanoMap& packed) {
    if (packed.channels() != 3) throw DataError("unpack_materials expects a 3-channel raster");
    const int w = packed.width(), h = packed.height();
    PanoMap roughness(w, h, Modality::Roughness);
    PanoMap metallic(w, h, Modality::Metallic);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!packed.valid(j, i)) {
                roughness.set_valid(j, i, false);
                metallic.set_valid(j, i, false);
                continue;
            }
            roughness.at(j, i) = packed.at(j, i, 0);
            metallic.at(j, i) = packed.at(j, i, 1);
        }
    }
    return {std::move(roughness), std::move(metallic)};
}

}  // namespace panoforge
