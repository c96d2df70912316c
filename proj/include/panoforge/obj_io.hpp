#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/image_io.hpp"
#include "panoforge/mesh.hpp"
#include "panoforge/panomap.hpp"

namespace panoforge {

// Panoramic textures attached to an exported mesh. Absent entries are
// simply skipped; roughness/metallic use the documented PBR extension
// keys map_Pr / map_Pm, the normal map goes out as map_Bump.
struct TextureSet {
    const PanoMap* albedo = nullptr;
    const PanoMap* normal = nullptr;
    const PanoMap* roughness = nullptr;
    const PanoMap* metallic = nullptr;
};

// Writes <stem>.obj, <stem>.mtl and the texture PNGs into dir. Vertices
// are written with six decimals, so a re-parse reproduces positions to
// 1e-6. Returns the written file paths.
inline std::vector<std::string> export_obj(const TriMesh& mesh, const TextureSet& textures,
                                           const std::string& dir,
                                           const std::string& stem = "mesh") {
    if (mesh.vertices.empty() || mesh.triangles.empty())
        throw DataError("export_obj: mesh is empty");
    if (mesh.uvs.size() != mesh.vertices.size())
        throw DataError("export_obj: mesh has no UVs; run spherical_uv first");

    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto path_of = [&](const std::string& name) {
        return (std::filesystem::path(dir) / name).string();
    };

    // Textures first so the MTL can reference what actually exists.
    std::string albedo_file, normal_file, rough_file, metal_file;
    if (textures.albedo) {
        albedo_file = stem + "_albedo.png";
        save_panomap(*textures.albedo, path_of(albedo_file));
        written.push_back(path_of(albedo_file));
    }
    if (textures.normal) {
        // world normals in [-1,1] encoded as 8-bit RGB
        PanoMap enc(textures.normal->width(), textures.normal->height(), Modality::RGB);
        for (size_t k = 0; k < enc.data().size(); ++k)
            enc.data()[k] = (textures.normal->data()[k] + 1.0f) * 0.5f;
        normal_file = stem + "_normal.png";
        save_panomap(enc, path_of(normal_file));
        written.push_back(path_of(normal_file));
    }
    if (textures.roughness) {
        rough_file = stem + "_roughness.png";
        save_panomap(*textures.roughness, path_of(rough_file));
        written.push_back(path_of(rough_file));
    }
    if (textures.metallic) {
        metal_file = stem + "_metallic.png";
        save_panomap(*textures.metallic, path_of(metal_file));
        written.push_back(path_of(metal_file));
    }

    const std::string mtl_name = stem + ".mtl";
    {
        std::ofstream mtl(path_of(mtl_name));
        if (!mtl) throw DataError("cannot open " + path_of(mtl_name));
        mtl << "newmtl " << stem << "\n";
        mtl << "Kd 1.000000 1.000000 1.000000\n";
        if (!albedo_file.empty()) mtl << "map_Kd " << albedo_file << "\n";
        if (!rough_file.empty()) mtl << "map_Pr " << rough_file << "\n";
        if (!metal_file.empty()) mtl << "map_Pm " << metal_file << "\n";
        if (!normal_file.empty()) mtl << "map_Bump " << normal_file << "\n";
        if (!mtl) throw DataError("failed writing " + path_of(mtl_name));
        written.push_back(path_of(mtl_name));
    }

    const std::string obj_path = path_of(stem + ".obj");
    std::ofstream obj(obj_path);
    if (!obj) throw DataError("cannot open " + obj_path);
    obj << "mtllib " << mtl_name << "\n";
    obj << "o " << stem << "\n";
    char line[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(line, sizeof line, "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
        obj << line;
    }
    for (const auto& uv : mesh.uvs) {
        std::snprintf(line, sizeof line, "vt %.6f %.6f\n", uv[0], uv[1]);
        obj << line;
    }
    obj << "usemtl " << stem << "\n";
    for (const auto& t : mesh.triangles)
        obj << "f " << t[0] + 1 << "/" << t[0] + 1 << " " << t[1] + 1 << "/" << t[1] + 1 << " "
            << t[2] + 1 << "/" << t[2] + 1 << "\n";
    if (!obj) throw DataError("failed writing " + obj_path);
    written.push_back(obj_path);
    return written;
}

// Minimal OBJ reader covering what export_obj emits (v / vt / f with
// v/vt references). Enough for round-trip checks and re-import.
inline TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    TriMesh mesh;
    std::vector<std::array<double, 2>> uvs;
    std::string word;
    std::string rest;
    for (std::string token; in >> token;) {
        if (token == "v") {
            Vec3 v;
            in >> v.x >> v.y >> v.z;
            mesh.vertices.push_back(v);
        } else if (token == "vt") {
            std::array<double, 2> uv{};
            in >> uv[0] >> uv[1];
            uvs.push_back(uv);
        } else if (token == "f") {
            std::array<uint32_t, 3> tri{};
            for (int k = 0; k < 3; ++k) {
                in >> word;
                tri[k] = uint32_t(std::stoul(word.substr(0, word.find('/')))) - 1;
            }
            mesh.triangles.push_back(tri);
        } else {
            std::getline(in, rest);  // skip the remainder of other directives
        }
    }
    mesh.uvs = uvs;
    if (!in.eof() && in.fail()) throw DataError("malformed OBJ: " + path);
    return mesh;
}

}  // namespace panoforge
