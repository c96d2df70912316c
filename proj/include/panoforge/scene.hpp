#pragma once

#include <optional>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/erp.hpp"
#include "panoforge/panomap.hpp"

// Analytic scenes built from closed-form primitives. Every downstream
// module (reconstruction, occlusion masks, metrics) is validated against
// renders of these scenes, so intersections are exact and deterministic.

namespace panoforge {

struct Material {
    Vec3 albedo{0.5, 0.5, 0.5};
    double roughness = 0.5;
    double metallic = 0.0;

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(albedo.x) || !in01(albedo.y) || !in01(albedo.z) || !in01(roughness) ||
            !in01(metallic))
            throw DataError("material values must lie in [0, 1]");
    }
};

struct SurfaceHit {
    double distance = 0.0;
    Vec3 normal;  // unit, facing the ray origin
    Material material;
};

// Axis-aligned box room seen from inside. Faces are indexed
// +x, -x, +y, -y, +z, -z and may carry distinct materials.
struct AABoxRoom {
    Vec3 center;
    Vec3 extents;  // full side lengths
    Material faces[6];

    Vec3 half() const { return extents * 0.5; }

    bool contains(const Vec3& p) const {
        const Vec3 h = half();
        return std::abs(p.x - center.x) < h.x && std::abs(p.y - center.y) < h.y &&
               std::abs(p.z - center.z) < h.z;
    }
};

struct Sphere {
    Vec3 center;
    double radius = 1.0;
    Material material;
};

struct GroundPlane {
    double height = 0.0;  // z of the plane
    Material material;
};

struct Scene {
    std::optional<AABoxRoom> room;
    std::vector<Sphere> spheres;
    std::optional<GroundPlane> ground;
    Vec3 camera_origin;
    std::optional<Vec3> sky;  // albedo of no-hit pixels; absent => fully invalid

    void validate() const {
        if (room) {
            if (!(room->extents.x > 0 && room->extents.y > 0 && room->extents.z > 0))
                throw DataError("room extents must be positive");
            if (!room->contains(camera_origin))
                throw DataError("camera must lie strictly inside the room");
            for (const auto& m : room->faces) m.validate();
        }
        for (const auto& s : spheres) {
            if (!(s.radius > 0)) throw DataError("sphere radius must be positive");
            s.material.validate();
        }
        if (ground) ground->material.validate();
    }
};

// Slab intersection against the room box. Interior rays hit the exit face
// and receive the inward normal, so hits always face the ray origin.
// face_out reports the wall index (+x,-x,+y,-y,+z,-z).
inline std::optional<SurfaceHit> ray_box_intersect(const Vec3& origin, const Vec3& dir,
                                                   const AABoxRoom& box, int* face_out = nullptr) {
    const Vec3 h = box.half();
    const double lo[3] = {box.center.x - h.x, box.center.y - h.y, box.center.z - h.z};
    const double hi[3] = {box.center.x + h.x, box.center.y + h.y, box.center.z + h.z};
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};

    double t_enter = -1e300, t_exit = 1e300;
    int enter_axis = -1, exit_axis = -1;
    int enter_sign = 0, exit_sign = 0;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
            continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        int near_sign = -1;  // crossing the lo face first
        if (t0 > t1) {
            std::swap(t0, t1);
            near_sign = +1;
        }
        if (t0 > t_enter) {
            t_enter = t0;
            enter_axis = a;
            enter_sign = near_sign;
        }
        if (t1 < t_exit) {
            t_exit = t1;
            exit_axis = a;
            exit_sign = -near_sign;
        }
    }
    if (t_enter > t_exit || t_exit <= 0.0) return std::nullopt;

    SurfaceHit hit;
    int axis, sign;
    if (t_enter > 0.0) {  // outside, entering: outward normal opposes the ray
        hit.distance = t_enter;
        axis = enter_axis;
        sign = enter_sign;
        double n[3] = {0, 0, 0};
        n[axis] = double(sign);
        hit.normal = {n[0], n[1], n[2]};
    } else {  // inside: exit face, inward normal points back at the origin
        hit.distance = t_exit;
        axis = exit_axis;
        sign = exit_sign;
        double n[3] = {0, 0, 0};
        n[axis] = -double(sign);
        hit.normal = {n[0], n[1], n[2]};
    }
    const int face = axis * 2 + (sign > 0 ? 0 : 1);  // +x,-x,+y,-y,+z,-z
    hit.material = box.faces[face];
    if (face_out) *face_out = face;
    return hit;
}

inline std::optional<SurfaceHit> ray_sphere_intersect(const Vec3& origin, const Vec3& dir,
                                                      const Sphere& sphere) {
    const Vec3 oc = sphere.center - origin;
    const double b = oc.dot(dir);
    const double disc = b * b - (oc.dot(oc) - sphere.radius * sphere.radius);
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t = b - s;
    if (t <= 0.0) t = b + s;
    if (t <= 0.0) return std::nullopt;
    SurfaceHit hit;
    hit.distance = t;
    const Vec3 p = origin + dir * t;
    Vec3 n = (p - sphere.center) / sphere.radius;
    if (n.dot(dir) > 0.0) n = -n;  // exit hit from inside: face the origin
    hit.normal = n;
    hit.material = sphere.material;
    return hit;
}

inline std::optional<SurfaceHit> ray_plane_intersect(const Vec3& origin, const Vec3& dir,
                                                     const GroundPlane& plane) {
    if (dir.z == 0.0) return std::nullopt;
    const double t = (plane.height - origin.z) / dir.z;
    if (t <= 0.0) return std::nullopt;
    SurfaceHit hit;
    hit.distance = t;
    hit.normal = {0.0, 0.0, origin.z >= plane.height ? 1.0 : -1.0};
    hit.material = plane.material;
    return hit;
}

// Nearest hit across all primitives.
inline std::optional<SurfaceHit> scene_intersect(const Scene& scene, const Vec3& origin,
                                                 const Vec3& dir) {
    std::optional<SurfaceHit> best;
    auto consider = [&](const std::optional<SurfaceHit>& h) {
        if (h && (!best || h->distance < best->distance)) best = h;
    };
    if (scene.room) consider(ray_box_intersect(origin, dir, *scene.room));
    for (const auto& s : scene.spheres) consider(ray_sphere_intersect(origin, dir, s));
    if (scene.ground) consider(ray_plane_intersect(origin, dir, *scene.ground));
    return best;
}

struct RenderResult {
    PanoMap distance;
    PanoMap normal;
    PanoMap albedo;
    PanoMap roughness;
    PanoMap metallic;
    PanoMap rgb;
};

// Casts the ERP ray of every pixel center. RGB uses a fixed Lambertian
// headlight term max(<-ray, normal>, 0); no-hit pixels are invalid except
// that albedo/RGB show the sky color when one is configured.
inline RenderResult render(const Scene& scene, int width, int height) {
    if (width != 2 * height) throw DataError("render: panorama must be 2:1");
    scene.validate();

    RenderResult r{PanoMap(width, height, Modality::Distance),
                   PanoMap(width, height, Modality::Normal),
                   PanoMap(width, height, Modality::Albedo),
                   PanoMap(width, height, Modality::Roughness),
                   PanoMap(width, height, Modality::Metallic),
                   PanoMap(width, height, Modality::RGB)};

    parallel_rows(height, [&](int j) {
        for (int i = 0; i < width; ++i) {
            const Vec3 dir = pixel_to_direction(i + 0.5, j + 0.5, width, height);
            const auto hit = scene_intersect(scene, scene.camera_origin, dir);
            if (!hit) {
                r.distance.set_valid(j, i, false);
                r.normal.set_valid(j, i, false);
                r.roughness.set_valid(j, i, false);
                r.metallic.set_valid(j, i, false);
                if (scene.sky) {
                    const Vec3 sky = *scene.sky;
                    r.albedo.at(j, i, 0) = float(sky.x);
                    r.albedo.at(j, i, 1) = float(sky.y);
                    r.albedo.at(j, i, 2) = float(sky.z);
                    r.rgb.at(j, i, 0) = float(sky.x);
                    r.rgb.at(j, i, 1) = float(sky.y);
                    r.rgb.at(j, i, 2) = float(sky.z);
                } else {
                    r.albedo.set_valid(j, i, false);
                    r.rgb.set_valid(j, i, false);
                }
                continue;
            }
            r.distance.at(j, i) = float(hit->distance);
            r.normal.at(j, i, 0) = float(hit->normal.x);
            r.normal.at(j, i, 1) = float(hit->normal.y);
            r.normal.at(j, i, 2) = float(hit->normal.z);
            const Material& m = hit->material;
            r.albedo.at(j, i, 0) = float(m.albedo.x);
            r.albedo.at(j, i, 1) = float(m.albedo.y);
            r.albedo.at(j, i, 2) = float(m.albedo.z);
            r.roughness.at(j, i) = float(m.roughness);
            r.metallic.at(j, i) = float(m.metallic);
            const double shade = std::max(-dir.dot(hit->normal), 0.0);
            r.rgb.at(j, i, 0) = float(m.albedo.x * shade);
            r.rgb.at(j, i, 1) = float(m.albedo.y * shade);
            r.rgb.at(j, i, 2) = float(m.albedo.z * shade);
        }
    });
    return r;
}

// --- Presets ------------------------------------------------------------
// Fixed geometry referenced by the test suite and the synth CLI; the
// box room is 4 x 6 x 3 with the camera at its center.

inline AABoxRoom default_room() {
    AABoxRoom room;
    room.center = {0, 0, 0};
    room.extents = {4, 6, 3};
    room.faces[0] = {{0.80, 0.30, 0.25}, 0.70, 0.00};  // +x wall
    room.faces[1] = {{0.25, 0.55, 0.80}, 0.60, 0.00};  // -x wall
    room.faces[2] = {{0.30, 0.70, 0.35}, 0.80, 0.00};  // +y wall
    room.faces[3] = {{0.85, 0.75, 0.30}, 0.75, 0.00};  // -y wall
    room.faces[4] = {{0.90, 0.90, 0.90}, 0.90, 0.00};  // ceiling
    room.faces[5] = {{0.45, 0.40, 0.35}, 0.40, 0.00};  // floor
    return room;
}

inline Scene preset_box_room() {
    Scene s;
    s.room = default_room();
    s.camera_origin = {0, 0, 0};
    return s;
}

inline Scene preset_box_room_spheres() {
    Scene s = preset_box_room();
    s.spheres.push_back({{1.2, -1.0, -0.9}, 0.6, {{0.85, 0.85, 0.88}, 0.15, 1.00}});
    s.spheres.push_back({{-0.8, 1.6, -0.75}, 0.75, {{0.60, 0.20, 0.20}, 0.85, 0.00}});
    return s;
}

inline Scene preset_sphere_in_room() {
    Scene s = preset_box_room();
    s.spheres.push_back({{1.5, 0.0, 0.0}, 0.5, {{0.20, 0.45, 0.75}, 0.30, 0.50}});
    return s;
}

inline Scene preset_by_name(const std::string& name) {
    if (name == "box-room") return preset_box_room();
    if (name == "box-room-spheres") return preset_box_room_spheres();
    if (name == "sphere-in-room") return preset_sphere_in_room();
    throw DataError("unknown scene preset: " + name);
}

}  // namespace panoforge
