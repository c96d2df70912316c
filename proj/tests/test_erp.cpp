#include <catch2/catch_amalgamated.hpp>

#include "panoforge/erp.hpp"

using namespace panoforge;

namespace {
constexpr int W = 512;
constexpr int H = 256;

double wrap_diff(double a, double b, double period) {
    double d = std::fmod(std::abs(a - b), period);
    return std::min(d, period - d);
}
}  // namespace

TEST_CASE("pixel_to_direction fixed convention") {
    const Vec3 fwd = pixel_to_direction(W / 2.0, H / 2.0, W, H);
    CHECK(fwd.x == Catch::Approx(1.0).margin(1e-12));
    CHECK(fwd.y == Catch::Approx(0.0).margin(1e-12));
    CHECK(fwd.z == Catch::Approx(0.0).margin(1e-12));

    const Vec3 back = pixel_to_direction(0.0, H / 2.0, W, H);
    CHECK(back.x == Catch::Approx(-1.0).margin(1e-12));
    CHECK(back.y == Catch::Approx(0.0).margin(1e-12));

    // phi = -pi/2, theta = pi/4
    const Vec3 d = pixel_to_direction(W / 4.0, H / 4.0, W, H);
    CHECK(d.x == Catch::Approx(0.0).margin(1e-12));
    CHECK(d.y == Catch::Approx(-0.70710678118654752).margin(1e-12));
    CHECK(d.z == Catch::Approx(0.70710678118654752).margin(1e-12));
}

TEST_CASE("pixel_to_direction wraps longitude and rejects bad latitude") {
    for (double u : {0.0, 0.25, 100.5, 511.75})  // dyadic: u + W is exact
        for (double v : {0.5, 100.0, 255.5}) {
            const Vec3 a = pixel_to_direction(u, v, W, H);
            const Vec3 b = pixel_to_direction(u + W, v, W, H);
            CHECK(a.x == b.x);
            CHECK(a.y == b.y);
            CHECK(a.z == b.z);
        }
    CHECK_THROWS_AS(pixel_to_direction(0.0, -0.1, W, H), DataError);
    CHECK_THROWS_AS(pixel_to_direction(0.0, H + 0.1, W, H), DataError);
}

TEST_CASE("direction_to_pixel inverts the convention") {
    const auto [u1, v1] = direction_to_pixel({1, 0, 0}, W, H);
    CHECK(u1 == Catch::Approx(W / 2.0).margin(1e-9));
    CHECK(v1 == Catch::Approx(H / 2.0).margin(1e-9));

    // pole: any longitude is valid, W/2 is the documented tie-break
    const auto [u2, v2] = direction_to_pixel({0, 0, 1}, W, H);
    CHECK(u2 == Catch::Approx(W / 2.0));
    CHECK(v2 == Catch::Approx(0.0).margin(1e-9));

    const double s = 1.0 / std::sqrt(2.0);
    const auto [u3, v3] = direction_to_pixel({0, -s, s}, W, H);
    CHECK(u3 == Catch::Approx(W / 4.0).margin(1e-9));
    CHECK(v3 == Catch::Approx(H / 4.0).margin(1e-9));

    CHECK_THROWS_AS(direction_to_pixel({0, 0, 0}, W, H), DataError);
}

TEST_CASE("pixel round trip over random samples") {
    Xoshiro256 rng(42);
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform(0.0, double(W));
        const double v = rng.uniform(0.5, H - 0.5);
        const auto [ru, rv] = direction_to_pixel(pixel_to_direction(u, v, W, H), W, H);
        CHECK(wrap_diff(ru, u, W) < 1e-6);
        CHECK(std::abs(rv - v) < 1e-6);
    }
}

TEST_CASE("make_ray_map samples pixel centers deterministically") {
    const RayMap rm = make_ray_map(4, 2);
    REQUIRE(rm.directions.size() == 8);
    for (const Vec3& d : rm.directions) CHECK(d.norm() == Catch::Approx(1.0).margin(1e-9));

    const Vec3 expect = pixel_to_direction(2.5, 1.5, 4, 2);
    CHECK(rm.at(1, 2).x == expect.x);
    CHECK(rm.at(1, 2).y == expect.y);
    CHECK(rm.at(1, 2).z == expect.z);
    CHECK(rm.at(1, 2).x > 0.0);  // +x hemisphere

    // antipodal longitudes flip the horizontal components
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            CHECK(rm.at(j, i).x == Catch::Approx(-rm.at(j, i + 2).x).margin(1e-12));
            CHECK(rm.at(j, i).y == Catch::Approx(-rm.at(j, i + 2).y).margin(1e-12));
            CHECK(rm.at(j, i).z == Catch::Approx(rm.at(j, i + 2).z).margin(1e-12));
        }

    const RayMap again = make_ray_map(4, 2);
    for (size_t k = 0; k < rm.directions.size(); ++k) {
        CHECK(rm.directions[k].x == again.directions[k].x);
        CHECK(rm.directions[k].y == again.directions[k].y);
        CHECK(rm.directions[k].z == again.directions[k].z);
    }

    CHECK_THROWS_AS(make_ray_map(5, 2), DataError);
    CHECK_THROWS_AS(make_ray_map(2, 1), DataError);
}

TEST_CASE("distance_to_planar_depth projects onto the view axis") {
    // On a 4x2 grid every ray has |x| = 0.5, so depth = 2 * 0.5 = 1 where
    // the ray leans toward +x and the rest is invalid.
    PanoMap dist(4, 2, Modality::Distance);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 4; ++i) dist.at(j, i) = 2.0f;

    const PanoMap depth = distance_to_planar_depth(dist, {1, 0, 0});
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 4; ++i) {
            const Vec3 d = pixel_to_direction(i + 0.5, j + 0.5, 4, 2);
            if (d.x > 0) {
                CHECK(depth.valid(j, i));
                CHECK(depth.at(j, i) == Catch::Approx(1.0).margin(1e-6));
            } else {
                CHECK_FALSE(depth.valid(j, i));
            }
        }

    // identity where the ray equals the axis
    PanoMap one(8, 4, Modality::Distance);
    for (auto& v : one.data()) v = 3.25f;
    const Vec3 axis = pixel_to_direction(2.5, 1.5, 8, 4);
    const PanoMap out = distance_to_planar_depth(one, axis);
    CHECK(out.at(1, 2) == Catch::Approx(3.25).margin(1e-9));
}

TEST_CASE("material packing round trips") {
    PanoMap rough(4, 2, Modality::Roughness);
    PanoMap metal(4, 2, Modality::Metallic);
    for (auto& v : rough.data()) v = 0.5f;
    for (auto& v : metal.data()) v = 1.0f;

    const PanoMap packed = pack_materials(rough, metal);
    REQUIRE(packed.channels() == 3);
    REQUIRE(packed.width() == 4);
    REQUIRE(packed.height() == 2);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 4; ++i) {
            CHECK(packed.at(j, i, 0) == 0.5f);
            CHECK(packed.at(j, i, 1) == 1.0f);
            CHECK(packed.at(j, i, 2) == 0.0f);
        }

    Xoshiro256 rng(7);
    PanoMap r2(8, 4, Modality::Roughness), m2(8, 4, Modality::Metallic);
    for (auto& v : r2.data()) v = float(rng.uniform());
    for (auto& v : m2.data()) v = float(rng.uniform());
    const auto [r3, m3] = unpack_materials(pack_materials(r2, m2));
    CHECK(r3.data() == r2.data());
    CHECK(m3.data() == m2.data());

    PanoMap wrong(6, 3, Modality::Metallic);
    CHECK_THROWS_AS(pack_materials(r2, wrong), DataError);
}
