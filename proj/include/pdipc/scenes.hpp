#pragma once

#include "pdipc/actuation.hpp"
#include "pdipc/mesh.hpp"
#include "pdipc/sim_driver.hpp"

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace pdipc {

// Procedural desk-scale scenes on a hex grid of cell size h = 0.125 / resolution,
// each cell split into six tetrahedra around its main diagonal.
//
// bar_bend:   2 x 0.25 x 0.25 bar fixed at its middle cross-section. Bilayer
//             actuation curls both halves upward until the end caps meet.
// slab_pinch: two 0.25-thick slabs separated by a 0.125 slot and joined by a
//             hinge block at x < 0.5; the x = 0 face is fixed. Swelling across
//             the thickness grows from zero at x = 1.25 to full at x = 2, so
//             the tips close the slot and press.
//
// The collision proxy is a closed box surface embedded in the end cells
// (bar_bend) or a pair of pads in the tip cells (slab_pinch), sampled so that
// no surface vertex lies on a tet face. The slab_pinch pads are staggered in y
// and overlap only in a narrow band, which keeps the contact region small.
enum class SceneKind { BarBend, SlabPinch };

std::string_view scene_kind_name(SceneKind kind);
SceneKind parse_scene_kind(std::string_view tag);

inline constexpr int kMinResolution = 1;
inline constexpr int kMaxResolution = 8;

struct SceneOptions {
    int resolution = 1;
    int frames = 10;
    // Final actuation strain (bar_bend: bilayer strain along the bar,
    // slab_pinch: swelling across the slabs); unset selects the default.
    std::optional<double> strain;
    // Fraction of the final strain reached at frame 0 (frames ramp linearly up to it).
    double ramp_start = 0.0;
    // Surface samples per cell edge; 0 picks max(1, 3 / resolution).
    int surface_samples = 0;
};

struct GeneratedScene {
    SceneKind kind = SceneKind::SlabPinch;
    TetMesh mesh;
    std::vector<Vec3> surface_vertices;
    std::vector<std::array<int, 3>> triangles;
    ActuationSequence actuation;
    double cell_size = 0;
    double d0 = 0;
    double kappa_scale = 0;
    int max_iters = 100;  // outer iterations per frame
};

// Throws ContractError for a resolution outside [kMinResolution, kMaxResolution]
// and GeometryError if the generated partition violates the scene's ratio bound.
GeneratedScene generate_scene(SceneKind kind, const SceneOptions& options = {});

// Writes mesh.tet, surface.obj, actuation.txt and scene.json into dir and
// returns the written config.
SceneConfig write_scene(const GeneratedScene& scene, const std::filesystem::path& dir);

}  // namespace pdipc
