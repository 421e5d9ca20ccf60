#pragma once

#include "pdipc/actuation.hpp"
#include "pdipc/ipc/barrier_terms.hpp"
#include "pdipc/ipc/line_search.hpp"
#include "pdipc/mesh.hpp"
#include "pdipc/pd_core.hpp"
#include "pdipc/solvers.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdipc {

struct SceneConfig {
    std::filesystem::path mesh;
    std::filesystem::path surface;
    std::filesystem::path actuation;
    Backend solver = Backend::Woodbury;
    double d0 = 0;
    double kappa_scale = 1e-3;
    double mu = 1.0;
    std::optional<double> tol_x;  // unset: 1e-4 * bounding-box diagonal
    int max_iters = 100;
    std::filesystem::path output = "out";
    bool bench = false;

    // Throws ParseError on d0 <= 0, tol_x <= 0, max_iters < 1 or mu <= 0.
    void validate() const;
};

// JSON object with the SceneConfig fields (mesh, surface, actuation, solver,
// d0, kappa_scale, mu, tol_x, max_iters, output, bench). Relative paths are
// resolved against base_dir. Unknown keys are rejected.
SceneConfig parse_scene_config(const std::string& text, const std::filesystem::path& base_dir = {});
SceneConfig load_scene_config(const std::filesystem::path& path);
// Paths are written relative to the directory of `path` when possible.
void save_scene_config(const SceneConfig& cfg, const std::filesystem::path& path);

struct Scene {
    TetMesh mesh;
    EmbeddedSurface surface;
    ActuationSequence actuation;
};

Scene load_scene(const SceneConfig& cfg);

struct SimulatorOptions {
    Backend backend = Backend::Woodbury;
    double d0 = 0;
    double kappa_scale = 1e-3;
    double mu = 1.0;
    double tol_x = 0;  // 0: 1e-4 * bounding-box diagonal
    int max_iters = 100;
    CgOptions cg;
    bool check_intersections = true;  // reject intersecting frame inputs
};

SimulatorOptions simulator_options(const SceneConfig& cfg);

struct FrameReport {
    int frame = 0;
    int iterations = 0;
    bool converged = false;
    double ipc_ms = 0;
    double gstep_ms = 0;
    double ccd_ms = 0;
    double ls_ms = 0;
    double misc_ms = 0;
    double total_ms = 0;
    int n_c_peak = 0;
    int gsteps = 0;
    long cg_iterations = 0;
    double kappa = 0;
    double energy = 0;
    double min_distance = 0;  // +inf when no surface pairs are within 20 d0
};

// One accepted outer iteration, reported to the observer.
struct IterationEvent {
    int frame = 0;
    int iteration = 0;
    const VecX* x_before = nullptr;  // full state the step was computed at
    const VecX* x_after = nullptr;   // accepted full state
    const ipc::BarrierBlocks* barrier = nullptr;
    const VecX* gradient = nullptr;  // total gradient on free DOFs
    const GlobalStepResult* step = nullptr;
    double alpha_max = 1;
    double alpha = 1;
};

struct FrameResult {
    VecX x;
    FrameReport report;
};

// Quasi-static solve of one frame: per outer iteration, local projections,
// constraint set, PSD barrier Hessian, total gradient, global step, CCD bound,
// backtracking line search, update. Converged when ||alpha dx||_inf < tol_x.
class Simulator {
public:
    Simulator(const TetMesh& mesh, const EmbeddedSurface& surface, SimulatorOptions options);

    // Throws GeometryError for an intersecting input state and
    // ipc::LineSearchStall (with the iterate's diagnostics) on a stalled line search.
    FrameResult simulate_frame(const VecX& x_t, const ActuationFrame& frame, int frame_index = 0);

    void set_observer(std::function<void(const IterationEvent&)> observer) { observer_ = std::move(observer); }

    const SimulatorOptions& options() const { return options_; }
    const StiffnessSystem& system() const { return sys_; }
    GlobalSolver& solver() { return solver_; }
    double kappa_init() const { return kappa_init_; }
    double tol_x() const { return tol_x_; }

private:
    const TetMesh* mesh_;
    const EmbeddedSurface* surface_;
    SimulatorOptions options_;
    StiffnessSystem sys_;
    GlobalSolver solver_;
    double kappa_init_ = 0;
    double tol_x_ = 0;
    std::function<void(const IterationEvent&)> observer_;
};

struct RunOptions {
    int frames = -1;  // -1: every actuation frame
    std::filesystem::path output;
    bool write_frames = true;  // frame_XXXX.obj per frame
    bool bench = false;        // bench_summary.csv plus a stdout summary
};

// Runs frames in order, each warm-started from the previous result; writes
// report.csv (flushed per frame) and the per-frame surfaces into output.
std::vector<FrameReport> run_sequence(Simulator& sim, const EmbeddedSurface& surface,
                                      const ActuationSequence& actuation, const RunOptions& options,
                                      VecX* final_state = nullptr);

inline constexpr const char* kReportColumns =
    "frame,iters,ipc_ms,gstep_ms,ccd_ms,ls_ms,misc_ms,total_ms,n_c_peak,min_dist";
void write_report_row(const FrameReport& r, std::ostream& out);

}  // namespace pdipc
