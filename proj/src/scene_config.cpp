#include "pdipc/sim_driver.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pdipc {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& dir)
{
    if (p.empty() || dir.empty()) {
        return p;
    }
    std::error_code ec;
    const auto rel = std::filesystem::relative(p, dir, ec);
    return ec || rel.empty() ? p : rel;
}

template <typename T>
T get(const json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("scene config: field '") + key + "' is missing or has the wrong type");
    }
}

}  // namespace

void SceneConfig::validate() const
{
    if (!(d0 > 0)) {
        throw ParseError("scene config: d0 must be positive");
    }
    if (tol_x && !(*tol_x > 0)) {
        throw ParseError("scene config: tol_x must be positive");
    }
    if (max_iters < 1) {
        throw ParseError("scene config: max_iters must be at least 1");
    }
    if (!(mu > 0)) {
        throw ParseError("scene config: mu must be positive");
    }
    if (!(kappa_scale > 0)) {
        throw ParseError("scene config: kappa_scale must be positive");
    }
}

SceneConfig parse_scene_config(const std::string& text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene config: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("scene config: expected a JSON object");
    }
    static const std::set<std::string> known = {"mesh", "surface", "actuation", "solver", "d0", "kappa_scale",
                                                "mu", "tol_x", "max_iters", "output", "bench"};
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw ParseError("scene config: unknown key '" + item.key() + "'");
        }
    }

    SceneConfig cfg;
    cfg.mesh = resolve(base_dir, get<std::string>(j, "mesh"));
    cfg.surface = resolve(base_dir, get<std::string>(j, "surface"));
    cfg.actuation = resolve(base_dir, get<std::string>(j, "actuation"));
    cfg.d0 = get<double>(j, "d0");
    if (j.contains("solver")) {
        cfg.solver = parse_backend(get<std::string>(j, "solver"));
    }
    if (j.contains("kappa_scale")) {
        cfg.kappa_scale = get<double>(j, "kappa_scale");
    }
    if (j.contains("mu")) {
        cfg.mu = get<double>(j, "mu");
    }
    if (j.contains("tol_x")) {
        cfg.tol_x = get<double>(j, "tol_x");
    }
    if (j.contains("max_iters")) {
        cfg.max_iters = get<int>(j, "max_iters");
    }
    if (j.contains("output")) {
        cfg.output = resolve(base_dir, get<std::string>(j, "output"));
    }
    if (j.contains("bench")) {
        cfg.bench = get<bool>(j, "bench");
    }
    cfg.validate();
    return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open scene config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene_config(text.str(), path.parent_path());
}

void save_scene_config(const SceneConfig& cfg, const std::filesystem::path& path)
{
    const auto dir = path.parent_path();
    json j;
    j["mesh"] = relative_to(cfg.mesh, dir).generic_string();
    j["surface"] = relative_to(cfg.surface, dir).generic_string();
    j["actuation"] = relative_to(cfg.actuation, dir).generic_string();
    j["solver"] = std::string(backend_name(cfg.solver));
    j["d0"] = cfg.d0;
    j["kappa_scale"] = cfg.kappa_scale;
    j["mu"] = cfg.mu;
    if (cfg.tol_x) {
        j["tol_x"] = *cfg.tol_x;
    }
    j["max_iters"] = cfg.max_iters;
    j["output"] = relative_to(cfg.output, dir).generic_string();
    j["bench"] = cfg.bench;
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

Scene load_scene(const SceneConfig& cfg)
{
    Scene scene;
    scene.mesh = load_tet_mesh(cfg.mesh);
    const TriangleSoup soup = load_obj(cfg.surface);
    scene.surface = build_embedding(scene.mesh, soup.vertices, soup.triangles);
    scene.actuation = load_actuation(cfg.actuation);
    if (scene.actuation.num_elements != scene.mesh.num_elements()) {
        throw ParseError("actuation has " + std::to_string(scene.actuation.num_elements) +
                         " elements per frame but the mesh has " + std::to_string(scene.mesh.num_elements()));
    }
    return scene;
}

}  // namespace pdipc
