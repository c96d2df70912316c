// panoforge command line: analytic panorama synthesis, projection, seam
// blending, mesh reconstruction, occlusion-aware mask sampling, metric
// evaluation, and the toy flow-matching demo.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panoforge/panoforge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace panoforge;

namespace {

constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    uint64_t seed = 0;
    int pano_width = 1024;
    int pano_height = 512;
    double tau = 1.3;
    double rho = 0.3;
    double percentile = 0.1;
    int schedule_steps = 32;

    std::map<std::string, std::string> as_map() const {
        return {{"seed", std::to_string(seed)},
                {"pano_width", std::to_string(pano_width)},
                {"pano_height", std::to_string(pano_height)},
                {"tau", format_double(tau)},
                {"rho", format_double(rho)},
                {"percentile", format_double(percentile)},
                {"schedule_steps", std::to_string(schedule_steps)}};
    }

    static std::string format_double(double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }
};

// Flat key = value file; '#' starts a comment. Flags win over file values.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

void apply_config_file(PipelineConfig& cfg, const std::map<std::string, std::string>& kv,
                       const std::set<std::string>& flag_overridden) {
    auto want = [&](const char* key) {
        return kv.count(key) && !flag_overridden.count(key);
    };
    if (want("seed")) cfg.seed = std::stoull(kv.at("seed"));
    if (want("pano_width")) cfg.pano_width = std::stoi(kv.at("pano_width"));
    if (want("pano_height")) cfg.pano_height = std::stoi(kv.at("pano_height"));
    if (want("tau")) cfg.tau = std::stod(kv.at("tau"));
    if (want("rho")) cfg.rho = std::stod(kv.at("rho"));
    if (want("percentile")) cfg.percentile = std::stod(kv.at("percentile"));
    if (want("schedule_steps")) cfg.schedule_steps = std::stoi(kv.at("schedule_steps"));
}

uint64_t config_hash(const PipelineConfig& cfg) {
    std::string canon;
    for (const auto& [k, v] : cfg.as_map()) canon += k + "=" + v + "\n";
    return fnv1a64(canon);
}

uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return fnv1a64(os.str());
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Run manifests record only file basenames so reruns into the same
// directory are byte-identical regardless of where the tree lives.
struct Manifest {
    json doc;

    Manifest(const std::string& command, const PipelineConfig& cfg) {
        doc["command"] = command;
        doc["version"] = kVersion;
        json c;
        for (const auto& [k, v] : cfg.as_map()) c[k] = v;
        doc["config"] = c;
        doc["config_hash"] = hex64(config_hash(cfg));
        doc["inputs"] = json::array();
        doc["outputs"] = json::array();
    }

    void add_input(const std::string& path) {
        doc["inputs"].push_back({{"file", fs::path(path).filename().string()},
                                 {"fnv64", hex64(file_hash(path))}});
    }
    void add_output(const std::string& path) {
        doc["outputs"].push_back(fs::path(path).filename().string());
    }

    void write(const std::string& dir) {
        fs::create_directories(dir);
        std::ofstream out(fs::path(dir) / "manifest.json");
        out << doc.dump(2) << "\n";
        if (!out) throw DataError("failed writing manifest in " + dir);
    }
};

Vec3 parse_vec3(const std::string& s) {
    Vec3 v;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
        throw DataError("expected x,y,z but got '" + s + "'");
    return v;
}

PinholeCamera camera_from_degrees(double fov_deg, double yaw_deg, double pitch_deg,
                                  double roll_deg, int width, int height) {
    PinholeCamera cam;
    cam.horizontal_fov = fov_deg * kPi / 180.0;
    cam.yaw = yaw_deg * kPi / 180.0;
    cam.pitch = pitch_deg * kPi / 180.0;
    cam.roll = roll_deg * kPi / 180.0;
    cam.width = width;
    cam.height = height;
    return cam;
}

json scene_to_json(const Scene& scene) {
    json j;
    j["camera_origin"] = {scene.camera_origin.x, scene.camera_origin.y, scene.camera_origin.z};
    if (scene.room) {
        json room;
        room["center"] = {scene.room->center.x, scene.room->center.y, scene.room->center.z};
        room["extents"] = {scene.room->extents.x, scene.room->extents.y, scene.room->extents.z};
        json faces = json::array();
        for (const auto& m : scene.room->faces)
            faces.push_back({{"albedo", {m.albedo.x, m.albedo.y, m.albedo.z}},
                             {"roughness", m.roughness},
                             {"metallic", m.metallic}});
        room["faces"] = faces;
        j["room"] = room;
    }
    json spheres = json::array();
    for (const auto& s : scene.spheres)
        spheres.push_back({{"center", {s.center.x, s.center.y, s.center.z}},
                           {"radius", s.radius},
                           {"material",
                            {{"albedo", {s.material.albedo.x, s.material.albedo.y, s.material.albedo.z}},
                             {"roughness", s.material.roughness},
                             {"metallic", s.material.metallic}}}});
    j["spheres"] = spheres;
    if (scene.ground)
        j["ground"] = {{"height", scene.ground->height}};
    if (scene.sky) j["sky"] = {scene.sky->x, scene.sky->y, scene.sky->z};
    return j;
}

Modality modality_from_name(const std::string& name) {
    for (Modality m : {Modality::RGB, Modality::Distance, Modality::Normal, Modality::Albedo,
                       Modality::Roughness, Modality::Metallic, Modality::Mask})
        if (name == modality_name(m)) return m;
    throw DataError("unknown modality: " + name);
}

// --- subcommands --------------------------------------------------------

int run_synth(const PipelineConfig& cfg, const std::string& preset, const std::string& out_dir) {
    const Scene scene = preset_by_name(preset);
    const RenderResult r = render(scene, cfg.pano_width, cfg.pano_height);

    fs::create_directories(out_dir);
    Manifest manifest("synth", cfg);
    manifest.doc["preset"] = preset;
    auto save = [&](const PanoMap& map, const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        save_panomap(map, path);
        manifest.add_output(path);
    };
    save(r.rgb, "rgb.png");
    save(r.albedo, "albedo.png");
    save(r.distance, "distance.pfm");
    save(r.normal, "normal.pfm");
    save(r.roughness, "roughness.png");
    save(r.metallic, "metallic.png");

    std::ofstream sj(fs::path(out_dir) / "scene.json");
    sj << scene_to_json(scene).dump(2) << "\n";
    manifest.add_output("scene.json");
    manifest.write(out_dir);
    return 0;
}

int run_project(const PipelineConfig& cfg, const std::string& image_path, double fov_deg,
                double yaw_deg, double pitch_deg, double roll_deg, const std::string& out_dir) {
    const PanoMap image = load_panomap(image_path, Modality::RGB);
    const PinholeCamera cam = camera_from_degrees(fov_deg, yaw_deg, pitch_deg, roll_deg,
                                                  image.width(), image.height());
    auto [pano, mask] = project_to_pano(image, cam, cfg.pano_width, cfg.pano_height);

    fs::create_directories(out_dir);
    Manifest manifest("project", cfg);
    manifest.add_input(image_path);
    manifest.doc["camera"] = {{"fov_deg", fov_deg},
                              {"yaw_deg", yaw_deg},
                              {"pitch_deg", pitch_deg},
                              {"roll_deg", roll_deg}};
    const std::string pano_path = (fs::path(out_dir) / "masked_pano.png").string();
    const std::string mask_path = (fs::path(out_dir) / "mask.png").string();
    save_panomap(pano, pano_path);
    save_panomap(mask, mask_path);
    manifest.add_output(pano_path);
    manifest.add_output(mask_path);
    manifest.write(out_dir);
    return 0;
}

int run_unproject(const PipelineConfig& cfg, const std::string& pano_path, double fov_deg,
                  double yaw_deg, double pitch_deg, double roll_deg, int width, int height,
                  const std::string& out_path) {
    const PanoMap pano = load_panomap(pano_path, Modality::RGB);
    const PinholeCamera cam =
        camera_from_degrees(fov_deg, yaw_deg, pitch_deg, roll_deg, width, height);
    const PanoMap view = pano_to_perspective(pano, cam);

    const std::string dir = fs::path(out_path).parent_path().string();
    Manifest manifest("unproject", cfg);
    manifest.add_input(pano_path);
    save_panomap(view, out_path);
    manifest.add_output(out_path);
    manifest.write(dir.empty() ? "." : dir);
    return 0;
}

int run_blend(const PipelineConfig& cfg, const std::string& in_path, const std::string& modality,
              int band, const std::string& out_path) {
    const Modality m = modality_from_name(modality);
    const PanoMap pano = load_panomap(in_path, m);
    const PanoMap blended = seam_blend(pano, band);

    const std::string dir = fs::path(out_path).parent_path().string();
    Manifest manifest("blend", cfg);
    manifest.add_input(in_path);
    manifest.doc["band"] = band;
    save_panomap(blended, out_path);
    manifest.add_output(out_path);
    manifest.write(dir.empty() ? "." : dir);
    return 0;
}

int run_recon(const PipelineConfig& cfg, const std::string& distance_path,
              const std::string& albedo_path, const std::string& normal_path,
              const std::string& roughness_path, const std::string& metallic_path,
              const std::string& origin_str, const std::string& out_dir) {
    const PanoMap distance = load_panomap(distance_path, Modality::Distance);
    const Vec3 origin = parse_vec3(origin_str);
    const TriMesh mesh = reconstruct_mesh(distance, origin, cfg.tau);

    std::optional<PanoMap> albedo, normal, roughness, metallic;
    if (!albedo_path.empty()) albedo = load_panomap(albedo_path, Modality::Albedo);
    if (!normal_path.empty()) normal = load_panomap(normal_path, Modality::Normal);
    if (!roughness_path.empty()) roughness = load_panomap(roughness_path, Modality::Roughness);
    if (!metallic_path.empty()) metallic = load_panomap(metallic_path, Modality::Metallic);

    TextureSet textures;
    if (albedo) textures.albedo = &*albedo;
    if (normal) textures.normal = &*normal;
    if (roughness) textures.roughness = &*roughness;
    if (metallic) textures.metallic = &*metallic;

    Manifest manifest("recon", cfg);
    manifest.add_input(distance_path);
    if (albedo) manifest.add_input(albedo_path);
    if (normal) manifest.add_input(normal_path);
    if (roughness) manifest.add_input(roughness_path);
    if (metallic) manifest.add_input(metallic_path);
    manifest.doc["origin"] = {origin.x, origin.y, origin.z};
    manifest.doc["triangles"] = mesh.triangles.size();
    manifest.doc["rejected_triangles"] = mesh.rejected_triangles;
    manifest.doc["vertices"] = mesh.vertices.size();

    for (const std::string& path : export_obj(mesh, textures, out_dir))
        manifest.add_output(path);
    manifest.write(out_dir);
    return 0;
}

int run_mask(const PipelineConfig& cfg, const std::string& distance_path,
             const std::string& displacement_str, const std::vector<std::string>& warp_specs,
             const std::string& out_dir) {
    const PanoMap distance = load_panomap(distance_path, Modality::Distance);

    Vec3 displacement;
    if (!displacement_str.empty()) {
        displacement = parse_vec3(displacement_str);
    } else {
        DisplacementSampler sampler{cfg.seed, cfg.rho, cfg.percentile};
        displacement = sample_displacement(sampler, distance);
    }

    // modality=path pairs to warp along with the distance map itself
    std::vector<PanoMap> extra_maps;
    std::vector<std::string> extra_names;
    for (const std::string& spec : warp_specs) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw DataError("--warp expects modality=path, got '" + spec + "'");
        const Modality m = modality_from_name(spec.substr(0, eq));
        extra_maps.push_back(load_panomap(spec.substr(eq + 1), m));
        extra_names.push_back(spec.substr(0, eq));
    }
    std::vector<const PanoMap*> sources{&distance};
    for (const auto& m : extra_maps) sources.push_back(&m);

    const WarpResult result = warp_pano(sources, distance, displacement, cfg.tau);

    fs::create_directories(out_dir);
    Manifest manifest("mask", cfg);
    manifest.add_input(distance_path);
    for (const std::string& spec : warp_specs)
        manifest.add_input(spec.substr(spec.find('=') + 1));
    manifest.doc["displacement"] = {displacement.x, displacement.y, displacement.z};
    manifest.doc["displacement_sampled"] = displacement_str.empty();
    manifest.doc["mask_fraction"] = result.mask_fraction;

    auto save = [&](const PanoMap& map, const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        save_panomap(map, path);
        manifest.add_output(path);
    };
    save(result.mask, "mask.png");
    save(result.warped[0], "warped_distance.pfm");
    for (size_t k = 0; k < extra_names.size(); ++k) {
        const Modality m = result.warped[k + 1].modality();
        const bool pfm = m == Modality::Distance || m == Modality::Normal;
        save(result.warped[k + 1], "warped_" + extra_names[k] + (pfm ? ".pfm" : ".png"));
    }
    manifest.write(out_dir);
    return 0;
}

int run_eval(const std::string& task, const std::string& pred_path, const std::string& gt_path,
             bool median_scale) {
    MetricReport report;
    if (task == "distance") {
        report = distance_metrics(load_panomap(pred_path, Modality::Distance),
                                  load_panomap(gt_path, Modality::Distance), median_scale);
    } else if (task == "normal") {
        report = normal_metrics(load_panomap(pred_path, Modality::Normal),
                                load_panomap(gt_path, Modality::Normal));
    } else if (task == "image") {
        report = image_metrics(load_panomap(pred_path, Modality::RGB),
                               load_panomap(gt_path, Modality::RGB));
    } else {
        throw DataError("unknown eval task: " + task);
    }

    json j;
    j["task"] = report.task;
    j["valid_pixel_count"] = report.valid_pixel_count;
    for (const auto& [k, v] : report.values)
        j[k] = std::isinf(v) ? json("inf") : json(v);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_flow_demo(const PipelineConfig& cfg, const std::string& assembly_name,
                  const std::string& model_name, int train_steps, double lr,
                  const std::string& out_dir) {
    using namespace panoforge::flow;

    Assembly assembly;
    if (assembly_name == "separate" || assembly_name == "separate-adapter")
        assembly = Assembly::SeparateAdapter;
    else if (assembly_name == "shared-token" || assembly_name == "shared-adapter")
        assembly = Assembly::SharedAdapter;
    else if (assembly_name == "shared-branch" || assembly_name == "channel")
        assembly = Assembly::SharedBranch;
    else
        throw DataError("unknown assembly: " + assembly_name);

    // Gaussian-shift task: z1 = z0 + mu with one zero condition stream.
    const std::vector<double> mu{0.7, -0.3};
    const int grid = 4;
    LatentGrid condition(grid, grid, 2, LatentTag::Generic);
    TaskSpec proto;
    proto.conditions = {condition};
    proto.targets = {LatentTag::Generic};
    proto.assembly = assembly;

    const auto dataset = make_shift_dataset(64, grid, grid, mu, condition, cfg.seed + 1);
    const std::vector<LatentGrid> example_zts{dataset[0].z0};

    std::unique_ptr<TrainableVelocityModel> model;
    std::vector<int> route_ids;
    if (model_name == "linear") {
        auto m = std::make_unique<LinearVelocityModel>(proto, example_zts);
        route_ids = m->route_ids();
        model = std::move(m);
    } else if (model_name == "mlp") {
        MlpVelocityModel::Config mc;
        mc.init_seed = cfg.seed + 2;
        auto m = std::make_unique<MlpVelocityModel>(proto, example_zts, mc);
        const AssembledTokens at = assemble_tokens(proto, example_zts);
        for (int r = 0; r < at.route_count(); ++r) route_ids.push_back(r);
        model = std::move(m);
    } else {
        throw DataError("unknown model: " + model_name);
    }

    TrainConfig tc;
    tc.steps = train_steps;
    tc.lr = lr;
    tc.seed = cfg.seed + 3;
    const TrainStats stats = train_toy(*model, dataset, proto, tc);

    // Transport check: integrate fresh noise and compare with z0 + mu.
    Xoshiro256 rng(cfg.seed + 4);
    LatentGrid z0(grid, grid, 2, LatentTag::Generic);
    for (auto& x : z0.data) x = rng.gaussian();
    const auto schedule = TimestepSchedule::uniform(cfg.schedule_steps);
    const auto z1_hat = euler_integrate(*model, z0, proto, schedule);
    double transport_err = 0.0;
    for (int r = 0; r < grid; ++r)
        for (int c = 0; c < grid; ++c)
            for (int ch = 0; ch < 2; ++ch)
                transport_err += std::abs(z1_hat[0].at(r, c, ch) - (z0.at(r, c, ch) + mu[ch]));
    transport_err /= grid * grid * 2;

    // LoRA algebra check: adapter forward vs offline-merged weight.
    Xoshiro256 lrng(cfg.seed + 5);
    LoRALayer layer(6, 5, 2, 2.0);
    for (auto& w : layer.base) w = lrng.gaussian();
    for (auto& w : layer.A) w = lrng.gaussian();
    for (auto& w : layer.B) w = lrng.gaussian();
    const auto merged = merged_weight(layer);
    double lora_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(5);
        for (auto& v : x) v = lrng.gaussian();
        const auto y_adapter = lora_forward(layer, x);
        for (int o = 0; o < 6; ++o) {
            double y = 0.0;
            for (int i = 0; i < 5; ++i) y += merged[size_t(o) * 5 + i] * x[i];
            lora_diff = std::max(lora_diff, std::abs(y - y_adapter[o]));
        }
    }

    json report;
    report["assembly"] = assembly_name;
    report["model"] = model_name;
    report["initial_loss"] = stats.initial_loss;
    report["final_loss"] = stats.final_loss;
    report["transport_mean_error"] = transport_err;
    report["lora_merge_max_diff"] = lora_diff;
    report["route_ids"] = route_ids;
    std::cout << report.dump(2) << "\n";

    if (!out_dir.empty()) {
        Manifest manifest("flow-demo", cfg);
        manifest.doc["report"] = report;
        manifest.write(out_dir);
    }
    if (transport_err > 0.5)
        throw NumericalError("flow demo failed to converge (transport error " +
                             std::to_string(transport_err) + ")");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panoforge: panorama geometry, synthesis, reconstruction and evaluation"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file (flags win)");

    std::set<std::string> overridden;
    auto track = [&](CLI::Option* opt, const char* key) {
        opt->each([&overridden, key](const std::string&) { overridden.insert(key); });
        return opt;
    };

    track(app.add_option("--seed", cfg.seed, "PRNG seed"), "seed");
    track(app.add_option("--pano-width", cfg.pano_width, "panorama width"), "pano_width");
    track(app.add_option("--pano-height", cfg.pano_height, "panorama height"), "pano_height");
    track(app.add_option("--tau", cfg.tau, "depth discontinuity ratio threshold"), "tau");
    track(app.add_option("--rho", cfg.rho, "displacement max fraction"), "rho");
    track(app.add_option("--percentile", cfg.percentile, "displacement distance percentile"),
          "percentile");
    track(app.add_option("--steps", cfg.schedule_steps, "ODE schedule steps"), "schedule_steps");

    // synth
    auto* synth = app.add_subcommand("synth", "render an analytic scene preset");
    std::string preset = "box-room";
    std::string out_dir = "out";
    synth->add_option("--preset", preset, "box-room | box-room-spheres | sphere-in-room");
    synth->add_option("--out", out_dir, "output directory")->required();

    // project
    auto* project = app.add_subcommand("project", "project a perspective image onto a panorama");
    std::string image_path;
    double fov_deg = 90.0, yaw_deg = 0.0, pitch_deg = 0.0, roll_deg = 0.0;
    project->add_option("--image", image_path, "input PNG image")->required();
    project->add_option("--fov-deg", fov_deg, "horizontal field of view");
    project->add_option("--yaw-deg", yaw_deg, "camera yaw");
    project->add_option("--pitch-deg", pitch_deg, "camera pitch");
    project->add_option("--roll-deg", roll_deg, "camera roll");
    project->add_option("--out", out_dir, "output directory")->required();

    // unproject
    auto* unproject = app.add_subcommand("unproject", "render a perspective view of a panorama");
    std::string pano_path, out_path;
    int view_w = 512, view_h = 512;
    unproject->add_option("--pano", pano_path, "input panorama PNG")->required();
    unproject->add_option("--width", view_w, "output width");
    unproject->add_option("--height", view_h, "output height");
    unproject->add_option("--fov-deg", fov_deg, "horizontal field of view");
    unproject->add_option("--yaw-deg", yaw_deg, "camera yaw");
    unproject->add_option("--pitch-deg", pitch_deg, "camera pitch");
    unproject->add_option("--roll-deg", roll_deg, "camera roll");
    unproject->add_option("--out", out_path, "output PNG path")->required();

    // blend
    auto* blend = app.add_subcommand("blend", "horizontal seam blending");
    std::string blend_in, blend_modality = "rgb";
    int band = 8;
    blend->add_option("--input", blend_in, "input raster")->required();
    blend->add_option("--modality", blend_modality, "raster modality (default rgb)");
    blend->add_option("--band", band, "half-width of the blend band in columns");
    blend->add_option("--out", out_path, "output path")->required();

    // recon
    auto* recon = app.add_subcommand("recon", "distance map to textured mesh");
    std::string distance_path, albedo_path, normal_path, roughness_path, metallic_path;
    std::string origin_str = "0,0,0";
    recon->add_option("--distance", distance_path, "distance map (PFM)")->required();
    recon->add_option("--albedo", albedo_path, "albedo texture (PNG)");
    recon->add_option("--normal", normal_path, "normal map (PFM)");
    recon->add_option("--roughness", roughness_path, "roughness map (PNG16)");
    recon->add_option("--metallic", metallic_path, "metallic map (PNG16)");
    recon->add_option("--origin", origin_str, "camera origin x,y,z");
    recon->add_option("--out", out_dir, "output directory")->required();

    // mask
    auto* mask = app.add_subcommand("mask", "occlusion-aware mask sampling");
    std::string displacement_str;
    std::vector<std::string> warp_specs;
    mask->add_option("--distance", distance_path, "distance map (PFM)")->required();
    mask->add_option("--displacement", displacement_str, "override sampled displacement x,y,z");
    mask->add_option("--warp", warp_specs, "additional modality=path maps to warp");
    mask->add_option("--out", out_dir, "output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "metric evaluation, JSON on stdout");
    std::string task, pred_path, gt_path;
    bool median_scale = false;
    eval->add_option("--task", task, "distance | normal | image")->required();
    eval->add_option("--pred", pred_path, "prediction file")->required();
    eval->add_option("--gt", gt_path, "ground truth file")->required();
    eval->add_flag("--median-scale", median_scale, "median-rescale prediction first");

    // flow-demo
    auto* flow_demo = app.add_subcommand("flow-demo", "toy MIMO rectified-flow training demo");
    std::string assembly_name = "separate", model_name = "linear";
    int train_steps = 2000;
    double lr = 1e-2;
    flow_demo->add_option("--assembly", assembly_name,
                          "separate | shared-token | shared-branch");
    flow_demo->add_option("--model", model_name, "linear | mlp");
    flow_demo->add_option("--train-steps", train_steps, "optimizer steps");
    flow_demo->add_option("--lr", lr, "AdamW learning rate");
    flow_demo->add_option("--out", out_dir, "optional manifest directory");
    flow_demo->preparse_callback([&](size_t) { out_dir.clear(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) apply_config_file(cfg, parse_config_file(config_path), overridden);

        if (synth->parsed()) return run_synth(cfg, preset, out_dir);
        if (project->parsed())
            return run_project(cfg, image_path, fov_deg, yaw_deg, pitch_deg, roll_deg, out_dir);
        if (unproject->parsed())
            return run_unproject(cfg, pano_path, fov_deg, yaw_deg, pitch_deg, roll_deg, view_w,
                                 view_h, out_path);
        if (blend->parsed()) return run_blend(cfg, blend_in, blend_modality, band, out_path);
        if (recon->parsed())
            return run_recon(cfg, distance_path, albedo_path, normal_path, roughness_path,
                             metallic_path, origin_str, out_dir);
        if (mask->parsed()) return run_mask(cfg, distance_path, displacement_str, warp_specs, out_dir);
        if (eval->parsed()) return run_eval(task, pred_path, gt_path, median_scale);
        if (flow_demo->parsed())
            return run_flow_demo(cfg, assembly_name, model_name, train_steps, lr, out_dir);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
