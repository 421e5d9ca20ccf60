#include "pdipc/sim_driver.hpp"

#include "pdipc/ipc/ccd.hpp"
#include "pdipc/ipc/constraint_set.hpp"
#include "pdipc/ipc/intersection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace pdipc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
decltype(auto) timed(double& acc_ms, F&& f)
{
    struct Charge {
        double& acc;
        Clock::time_point start = Clock::now();
        ~Charge() { acc += elapsed_ms(start); }
    } charge{acc_ms};
    return f();
}

ipc::BarrierBlocks empty_barrier(int dofs, double kappa)
{
    ipc::BarrierBlocks b;
    b.kappa = kappa;
    b.gradient = VecX::Zero(dofs);
    return b;
}

}  // namespace

SimulatorOptions simulator_options(const SceneConfig& cfg)
{
    SimulatorOptions o;
    o.backend = cfg.solver;
    o.d0 = cfg.d0;
    o.kappa_scale = cfg.kappa_scale;
    o.mu = cfg.mu;
    o.tol_x = cfg.tol_x.value_or(0.0);
    o.max_iters = cfg.max_iters;
    return o;
}

Simulator::Simulator(const TetMesh& mesh, const EmbeddedSurface& surface, SimulatorOptions options)
    : mesh_(&mesh),
      surface_(&surface),
      options_(options),
      sys_(assemble_H(mesh, options.mu)),
      solver_(sys_, partition_permutation(mesh, surface), options.backend, options.cg)
{
    if (!(options_.d0 > 0)) {
        throw ContractError("d0 must be positive");
    }
    if (options_.max_iters < 1) {
        throw ContractError("max_iters must be at least 1");
    }
    tol_x_ = options_.tol_x > 0 ? options_.tol_x : 1e-4 * mesh.bbox_diagonal();
    kappa_init_ = ipc::init_kappa(sys_.mean_diagonal(), options_.mu, options_.d0, options_.kappa_scale);
}

FrameResult Simulator::simulate_frame(const VecX& x_t, const ActuationFrame& frame, int frame_index)
{
    const auto frame_start = Clock::now();
    const TetMesh& mesh = *mesh_;
    const EmbeddedSurface& surface = *surface_;
    const DofMap& dofs = mesh.dofs;
    const double d0 = options_.d0;
    const bool contact = options_.backend != Backend::None;

    FrameReport rep;
    rep.frame = frame_index;
    VecX x = x_t;
    double kappa = kappa_init_;
    double energy = 0;

    timed(rep.misc_ms, [&] {
        if (x.size() != 3 * mesh.num_vertices()) {
            throw ContractError("state has the wrong size");
        }
        if (static_cast<int>(frame.matrices.size()) != mesh.num_elements()) {
            throw ContractError("actuation frame does not match the mesh");
        }
        frame.validate();
    });
    if (contact && options_.check_intersections) {
        timed(rep.ipc_ms, [&] {
            const auto s = surface.positions(x);
            if (ipc::count_intersecting_triangle_pairs(surface.triangles, s) > 0 ||
                !(ipc::minimum_distance(surface, s, d0) > 0)) {
                throw GeometryError("frame " + std::to_string(frame_index) + ": initial state intersects");
            }
        });
    }

    for (int it = 1; it <= options_.max_iters; ++it) {
        const auto projections = timed(rep.misc_ms, [&] { return local_step(mesh, x, frame); });

        std::vector<Vec3> s;
        ipc::ConstraintSet set;
        const ipc::BarrierBlocks barrier = timed(rep.ipc_ms, [&] {
            if (!contact) {
                return empty_barrier(dofs.num_free_dofs(), kappa);
            }
            s = surface.positions(x);
            set = ipc::build_constraint_set(surface, s, d0);
            return ipc::barrier_terms(mesh, surface, s, set, kappa);
        });

        const VecX g = timed(rep.misc_ms, [&] { return VecX(pd_gradient(sys_, x, projections) + barrier.gradient); });
        const GlobalStepResult step = timed(rep.gstep_ms, [&] { return solver_.solve(barrier, g); });
        const VecX dx = timed(rep.misc_ms, [&] {
            VecX full = VecX::Zero(x.size());
            dofs.scatter_add(step.delta_x, 1.0, full);
            return full;
        });
        const double dx_inf = step.delta_x.size() ? step.delta_x.lpNorm<Eigen::Infinity>() : 0.0;

        double alpha_max = 1.0;
        double alpha = 1.0;
        ipc::ConstraintSet accepted_set;
        if (!contact) {
            energy = timed(rep.misc_ms, [&] { return pd_energy(sys_, x + dx, projections); });
        } else {
            alpha_max = timed(rep.ccd_ms, [&] { return ipc::ccd_max_step(surface, s, surface.displacements(dx)); });
            timed(rep.ls_ms, [&] {
                const double e0 = pd_energy(sys_, x, projections) + barrier.energy;
                ipc::ConstraintSet trial_set;
                const auto eval = [&](double a) {
                    const VecX xa = x + a * dx;
                    trial_set = ipc::build_constraint_set(surface, surface.positions(xa), d0);
                    return pd_energy(sys_, xa, projections) + ipc::barrier_energy(trial_set, kappa);
                };
                if (dx_inf < tol_x_) {
                    // Stationary up to tolerance: take the step only if it does not increase the energy.
                    const double e = eval(alpha_max);
                    if (e <= e0) {
                        alpha = alpha_max;
                        energy = e;
                        accepted_set = trial_set;
                    } else {
                        alpha = 0;
                        energy = e0;
                        accepted_set = set;
                    }
                    return;
                }
                try {
                    const auto ls = ipc::backtracking_line_search(eval, e0, g.dot(step.delta_x), alpha_max);
                    alpha = ls.alpha;
                    energy = ls.energy;
                    accepted_set = trial_set;
                } catch (const ipc::LineSearchStall& e) {
                    std::ostringstream msg;
                    msg << "frame " << frame_index << ", iteration " << it << ": " << e.what()
                        << " (|g| = " << g.norm() << ", |dx|_inf = " << dx_inf << ", alpha_max = " << alpha_max
                        << ", kappa = " << kappa << ", pairs = " << set.size()
                        << ", min distance = " << set.min_distance() << ")";
                    throw ipc::LineSearchStall(msg.str());
                }
            });
        }

        const VecX x_before = x;
        timed(rep.misc_ms, [&] { x += alpha * dx; });
        if (contact) {
            timed(rep.ipc_ms, [&] { kappa = ipc::adapt_kappa(kappa, kappa_init_, accepted_set.min_distance(), d0); });
        }

        rep.iterations = it;
        ++rep.gsteps;
        rep.cg_iterations += step.stats.cg_iterations;
        rep.n_c_peak = std::max(rep.n_c_peak, barrier.n_c());
        if (observer_) {
            IterationEvent ev;
            ev.frame = frame_index;
            ev.iteration = it;
            ev.x_before = &x_before;
            ev.x_after = &x;
            ev.barrier = &barrier;
            ev.gradient = &g;
            ev.step = &step;
            ev.alpha_max = alpha_max;
            ev.alpha = alpha;
            observer_(ev);
        }
        if (alpha * dx_inf < tol_x_) {
            rep.converged = true;
            break;
        }
    }

    timed(rep.misc_ms, [&] {
        const auto s = surface.positions(x);
        rep.min_distance = ipc::minimum_distance(surface, s, 20.0 * d0);
    });
    rep.kappa = kappa;
    rep.energy = energy;
    rep.total_ms = elapsed_ms(frame_start);
    return {std::move(x), rep};
}

void write_report_row(const FrameReport& r, std::ostream& out)
{
    char line[512];
    std::snprintf(line, sizeof line, "%d,%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%d,", r.frame, r.iterations, r.ipc_ms,
                  r.gstep_ms, r.ccd_ms, r.ls_ms, r.misc_ms, r.total_ms, r.n_c_peak);
    out << line;
    if (std::isfinite(r.min_distance)) {
        std::snprintf(line, sizeof line, "%.9g", r.min_distance);
        out << line << '\n';
    } else {
        out << "inf\n";
    }
}

std::vector<FrameReport> run_sequence(Simulator& sim, const EmbeddedSurface& surface,
                                      const ActuationSequence& actuation, const RunOptions& options,
                                      VecX* final_state)
{
    const int available = static_cast<int>(actuation.frames.size());
    const int frames = options.frames < 0 ? available : options.frames;
    if (frames > available) {
        throw ContractError("requested " + std::to_string(frames) + " frames but the actuation has " +
                            std::to_string(available));
    }
    const bool write = !options.output.empty();
    std::ofstream csv;
    if (write) {
        std::filesystem::create_directories(options.output);
        csv.open(options.output / "report.csv");
        if (!csv) {
            throw Error("cannot write " + (options.output / "report.csv").string());
        }
        csv << kReportColumns << '\n' << std::flush;
    }

    std::vector<FrameReport> reports;
    VecX x = sim.system().mesh->rest_state();
    for (int t = 0; t < frames; ++t) {
        FrameResult r = sim.simulate_frame(x, actuation.frames[t], t);
        x = std::move(r.x);
        reports.push_back(r.report);
        if (write) {
            write_report_row(r.report, csv);
            csv.flush();
            if (options.write_frames) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%04d.obj", t);
                save_obj(surface.positions(x), surface.triangles, options.output / name);
            }
        }
    }

    if (write && options.bench && !reports.empty()) {
        std::ofstream out(options.output / "bench_summary.csv");
        out << "backend,frames,iters_mean,ipc_ms,gstep_ms,ccd_ms,ls_ms,misc_ms,total_ms,gstep_per_solve_ms,"
               "cg_iters_per_solve,n_c_peak\n";
        FrameReport sum;
        long gsteps = 0;
        for (const auto& r : reports) {
            sum.iterations += r.iterations;
            sum.ipc_ms += r.ipc_ms;
            sum.gstep_ms += r.gstep_ms;
            sum.ccd_ms += r.ccd_ms;
            sum.ls_ms += r.ls_ms;
            sum.misc_ms += r.misc_ms;
            sum.total_ms += r.total_ms;
            sum.cg_iterations += r.cg_iterations;
            sum.n_c_peak = std::max(sum.n_c_peak, r.n_c_peak);
            gsteps += r.gsteps;
        }
        const double n = static_cast<double>(reports.size());
        char line[512];
        std::snprintf(line, sizeof line, "%s,%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%d\n",
                      std::string(backend_name(sim.options().backend)).c_str(), static_cast<int>(reports.size()),
                      sum.iterations / n, sum.ipc_ms / n, sum.gstep_ms / n, sum.ccd_ms / n, sum.ls_ms / n,
                      sum.misc_ms / n, sum.total_ms / n, gsteps ? sum.gstep_ms / gsteps : 0.0,
                      gsteps ? double(sum.cg_iterations) / gsteps : 0.0, sum.n_c_peak);
        out << line;
    }
    if (final_state) {
        *final_state = std::move(x);
    }
    return reports;
}

}  // namespace pdipc
