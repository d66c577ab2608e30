#pragma once

#include <functional>
#include <random>

#include "schf/cahn_hilliard.hpp"
#include "schf/config.hpp"
#include "schf/homogenize.hpp"
#include "schf/io.hpp"
#include "schf/stokes.hpp"

namespace schf {

/// Micro solution quadruple on the masked grid.
struct MicroState {
    double t = 0.0;
    ScalarField c, w, p;
    VectorField u;
};

/// Macro solution on the unmasked grid with effective tensors.
struct MacroState {
    double t = 0.0;
    ScalarField c, w_bar, p;
    VectorField u_bar;
};

struct RunSummary {
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double mass_drift_rel = 0.0;
    double max_budget_increase = 0.0;  // max per-step rise of E_int + E_kin
    double max_div_norm = 0.0;
    bool diffusion_stable = true;
    int max_ch_iterations = 0;
    int max_poisson_iterations = 0;
};

struct RunHooks {
    std::string out_dir;             // when set, CSV/snapshots/run.log are written
    bool collect_snapshots = false;  // keep snapshot fields in memory
    std::function<void(int, const MicroState&)> observe_micro;  // every recorded step
    std::function<void(int, const MacroState&)> observe_macro;
};

struct MicroRunResult {
    MicroState state;
    std::vector<DiagnosticsRecord> records;
    std::vector<std::pair<double, ScalarField>> snapshots;
    RunSummary summary;
    std::string log;
};

struct MacroRunResult {
    MacroState state;
    std::vector<DiagnosticsRecord> records;
    std::vector<std::pair<double, ScalarField>> snapshots;
    RunSummary summary;
    std::string log;
};

// -- initial conditions -------------------------------------------------------

namespace detail {

inline ScalarField resample_bilinear(const ScalarField& src, const Grid2D& target) {
    if (src.grid == target) return src;
    ScalarField out(target);
    for (int j = 0; j < target.ny; ++j)
        for (int i = 0; i < target.nx; ++i)
            out.at(i, j) = bilinear_probe(src.v, src.grid, target.xc(i), target.yc(j));
    return out;
}

}  // namespace detail

/// Initial order parameter. The mixed mode samples seeded noise on the
/// configured sample lattice (ic.sample via grid dims) so refined-grid runs of
/// the same config see the same initial data.
inline ScalarField initial_concentration(const SimConfig& cfg, const Grid2D& target,
                                         int sample_nx = 0, int sample_ny = 0) {
    const double lx = cfg.grid.lx, ly = cfg.grid.ly;
    if (cfg.ic.mode == "paper-literal")
        return field_from(target, [](double x, double) { return x + 3.0; });
    if (cfg.ic.mode == "uniform") {
        ScalarField c(target, cfg.ic.value);
        return c;
    }
    if (cfg.ic.mode == "cosine") {
        const double amp = cfg.ic.amplitude;
        return field_from(target, [&](double x, double y) {
            return 0.5 + amp * std::cos(M_PI * x / lx) * std::cos(M_PI * y / ly);
        });
    }
    // mixed: c = 0.5 + amplitude * uniform(-1,1)
    const int snx = sample_nx > 0 ? sample_nx : target.nx;
    const int sny = sample_ny > 0 ? sample_ny : target.ny;
    ScalarField base(build_grid(snx, sny, lx, ly));
    std::mt19937_64 rng(cfg.ic.seed);
    for (double& v : base.v) {
        const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = 0.5 + cfg.ic.amplitude * (2.0 * u01 - 1.0);
    }
    return detail::resample_bilinear(base, target);
}

inline VectorField initial_velocity(const SimConfig& cfg, const Grid2D& g, const PoreMask* mask) {
    if (cfg.ic.mode == "uniform" || cfg.ic.mode == "cosine") return VectorField(g);
    VectorField u(g, 1.0, 1.0);
    detail::zero_on_solid(u, mask);
    u = project_div_free(u, mask, cfg.solver.proj_tol);
    return u;
}

// -- diagnostics and logging --------------------------------------------------

inline DiagnosticsRecord make_record(double t, const ScalarField& c, const VectorField& u,
                                     const PhysicalParams& params, const PoreMask* mask,
                                     const SimConfig& cfg) {
    DiagnosticsRecord r;
    r.t = t;
    r.e_int = interfacial_energy(c, params, mask);
    auto [ekin, mass] = kinetic_energy_and_mass(u, c, mask);
    r.e_kin = ekin;
    r.mass = mass;
    if (cfg.output.length_mode == "energy_ratio")
        r.length = r.e_int / profile_sigma(params.a, params.b);
    else
        r.length = interface_length(c, cfg.output.length_level, mask);
    for (const auto& p : cfg.probes) {
        const ProbeValue pc = probe(c, p[0], p[1], mask);
        const auto pu = probe_vector(u, p[0], p[1]);
        r.probes.push_back({pc.value, pu[0], pu[1]});
    }
    return r;
}

inline std::string run_log_header(const SimConfig& cfg, const std::string& command) {
    std::ostringstream os;
    os << "schf " << kVersion << " run log\n";
    os << "command: " << command << "\n";
    os << "-- modeling decisions --\n";
    os << "decision: quasi-steady Darcy closure at the macro scale (unsteady cell momentum "
          "term dropped)\n";
    os << "decision: xi cell problem solved as the flux-repaired trace problem, source d = "
       << cfg.solver.xi_source << " (literal Hessian condition has no periodic solution; defect "
       << "reported)\n";
    os << "decision: corrector mode = " << cfg.solver.corrector
       << " (off reproduces A_eff = theta*I)\n";
    os << "note: params.p_init = " << cfg.params.p_init
       << " is stored as the initial pressure constant (pressure is defined up to a constant)\n";
    os << "-- resolved config --\n";
    os << serialize_config(cfg);
    return os.str();
}

namespace detail {

inline std::string snapshot_stem(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return std::string("c_t") + buf;
}

inline void write_snapshot_files(const ScalarField& c, const std::string& dir, double t,
                                 const std::string& formats) {
    const std::string stem = dir + "/" + snapshot_stem(t);
    if (formats.find("pgm") != std::string::npos)
        write_field_snapshot(c, stem + ".pgm", SnapshotFormat::pgm);
    if (formats.find("raw") != std::string::npos)
        write_field_snapshot(c, stem + ".raw", SnapshotFormat::raw);
}

inline bool snapshot_due(double t, double dt, const std::vector<double>& times) {
    for (double ts : times)
        if (std::fabs(t - ts) < 0.5 * dt) return true;
    return false;
}

}  // namespace detail

// -- micro driver -------------------------------------------------------------

inline MicroRunResult run_micro(const SimConfig& cfg, const RunHooks& hooks = {},
                                const MicroState* resume = nullptr) {
    const Grid2D grid = build_grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly);
    const PoreMask mask = build_pore_mask(grid, cfg.cell_geometry(), cfg.geometry.eps_geom);
    const PhysicalParams params = cfg.physical();
    const BoundarySpec bc_c = BoundarySpec::neumann(&mask);
    const BoundarySpec bc_u = BoundarySpec::dirichlet(&mask);

    MicroRunResult res;
    res.log = run_log_header(cfg, "micro");
    if (!hooks.out_dir.empty()) std::filesystem::create_directories(hooks.out_dir);

    MicroState s;
    if (resume) {
        s = *resume;
        require(s.c.grid == grid, "run_micro: resume state grid mismatch");
    } else {
        s.t = 0.0;
        s.c = initial_concentration(cfg, grid);
        s.w = chemical_potential(s.c, params, bc_c);
        s.u = initial_velocity(cfg, grid, &mask);
        s.p = ScalarField(grid, cfg.params.p_init);
    }

    const long n_steps = std::lround((cfg.time.t_end - s.t) / cfg.time.dt);
    RunSummary& sum = res.summary;
    auto [ek0, m0] = kinetic_energy_and_mass(s.u, s.c, &mask);
    sum.mass_initial = m0;
    double budget_prev = interfacial_energy(s.c, params, &mask) + ek0;

    res.records.push_back(make_record(s.t, s.c, s.u, params, &mask, cfg));
    if (hooks.observe_micro) hooks.observe_micro(0, s);
    if (detail::snapshot_due(s.t, cfg.time.dt, cfg.time.snapshot_times)) {
        if (hooks.collect_snapshots) res.snapshots.emplace_back(s.t, s.c);
        if (!hooks.out_dir.empty())
            detail::write_snapshot_files(s.c, hooks.out_dir, s.t, cfg.output.formats);
    }

    for (long step = 1; step <= n_steps; ++step) {
        try {
            CHState ch{s.t, std::move(s.c), std::move(s.w)};
            CHStepStats chst;
            CHState ch_next = ch_step(ch, s.u, params, &mask, cfg.time.dt, cfg.solver.cg_tol, &chst);
            sum.max_ch_iterations = std::max(sum.max_ch_iterations, chst.cg.iterations);

            VectorField force = capillary_force(ch_next.c, ch_next.w, params, &mask);
            StokesState st{s.t, std::move(s.u), std::move(s.p)};
            StokesStepStats sst;
            StokesState st_next = stokes_step(st, force, params, &mask, cfg.time.dt,
                                              cfg.solver.proj_tol, &sst, false,
                                              cfg.solver.compat_tol);
            sum.max_poisson_iterations = std::max(sum.max_poisson_iterations, sst.poisson.iterations);
            sum.max_div_norm = std::max(sum.max_div_norm, sst.div_norm);
            sum.diffusion_stable = sum.diffusion_stable && sst.diffusion_stable;

            s.t = ch_next.t;
            s.c = std::move(ch_next.c);
            s.w = std::move(ch_next.w);
            s.u = std::move(st_next.u);
            s.p = std::move(st_next.p);
        } catch (const std::exception& e) {
            if (!hooks.out_dir.empty()) {
                write_field_snapshot(s.c, hooks.out_dir + "/abort_c.raw", SnapshotFormat::raw);
                write_field_snapshot(s.w, hooks.out_dir + "/abort_w.raw", SnapshotFormat::raw);
                write_field_snapshot(s.p, hooks.out_dir + "/abort_p.raw", SnapshotFormat::raw);
            }
            std::ostringstream os;
            os << "run_micro: step " << step << " failed: " << e.what();
            if (dynamic_cast<const SolverError*>(&e)) throw SolverError(os.str(), 0.0, 0);
            throw std::runtime_error(os.str());
        }

        auto [ek, m] = kinetic_energy_and_mass(s.u, s.c, &mask);
        const double budget = interfacial_energy(s.c, params, &mask) + ek;
        sum.max_budget_increase = std::max(sum.max_budget_increase, budget - budget_prev);
        budget_prev = budget;

        if (step % cfg.time.record_every == 0) {
            res.records.push_back(make_record(s.t, s.c, s.u, params, &mask, cfg));
            if (hooks.observe_micro) hooks.observe_micro(static_cast<int>(step), s);
        }
        if (detail::snapshot_due(s.t, cfg.time.dt, cfg.time.snapshot_times)) {
            if (hooks.collect_snapshots) res.snapshots.emplace_back(s.t, s.c);
            if (!hooks.out_dir.empty())
                detail::write_snapshot_files(s.c, hooks.out_dir, s.t, cfg.output.formats);
        }
    }

    auto [ekf, mf] = kinetic_energy_and_mass(s.u, s.c, &mask);
    sum.mass_final = mf;
    sum.mass_drift_rel = std::fabs(mf - sum.mass_initial) / std::max(1e-300, std::fabs(sum.mass_initial));

    std::ostringstream os;
    os << res.log;
    os << "-- summary --\n";
    os << "steps = " << n_steps << "\n";
    os << "mass drift (relative) = " << sum.mass_drift_rel << "\n";
    os << "max per-step increase of E_int + E_kin = " << sum.max_budget_increase << "\n";
    os << "max ||div u||_2 = " << sum.max_div_norm << "\n";
    os << "explicit viscous step stable = " << (sum.diffusion_stable ? "yes" : "no") << "\n";
    res.log = os.str();

    res.state = std::move(s);
    if (!hooks.out_dir.empty()) {
        write_timeseries_csv(res.records, hooks.out_dir + "/timeseries.csv");
        write_text(hooks.out_dir + "/run.log", res.log);
    }
    return res;
}

// -- macro driver -------------------------------------------------------------

/// One step of the upscaled system: macro chemical potential with the
/// corrector folded into A_eff, Darcy velocity from the K-weighted pressure
/// Poisson problem, then the stabilized implicit CH update with porosity
/// weighting. The quasi-steady Darcy closure drops the unsteady cell term.
/// The eps_model factors enter exactly as in the micro system, so the run is
/// the plain upscaled system on the time variable tau = eps^2 t; eps_model = 1
/// gives the undilated form.
inline MacroRunResult run_macro(const SimConfig& cfg, const EffectiveTensors& eff,
                                const RunHooks& hooks = {}, const MacroState* resume = nullptr) {
    const Grid2D grid = build_grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly);
    const PhysicalParams params = cfg.physical();
    const BoundarySpec bc = BoundarySpec::neumann(nullptr);
    const Tensor2 A = eff.A_eff;
    const double theta = eff.theta;
    if (theta <= 1e-12) throw SolverError("run_macro: porosity ~ 0, system ill-conditioned", theta, 0);

    MacroRunResult res;
    res.log = run_log_header(cfg, "macro");
    if (!hooks.out_dir.empty()) std::filesystem::create_directories(hooks.out_dir);

    MacroState s;
    if (resume) {
        s = *resume;
        require(s.c.grid == grid, "run_macro: resume state grid mismatch");
    } else {
        s.t = 0.0;
        s.c = initial_concentration(cfg, grid);
        ScalarField lac = laplacian_weighted(s.c, A, bc);
        s.w_bar = ScalarField(grid);
        for (int k = 0; k < grid.cells(); ++k)
            s.w_bar.v[k] = bulk_force(s.c.v[k], params.b) - params.a * lac.v[k];
        s.u_bar = VectorField(grid);
        s.p = ScalarField(grid, cfg.params.p_init);
    }

    const long n_steps = std::lround((cfg.time.t_end - s.t) / cfg.time.dt);
    RunSummary& sum = res.summary;
    sum.mass_initial = kinetic_energy_and_mass(s.u_bar, s.c, nullptr).second;

    res.records.push_back(make_record(s.t, s.c, s.u_bar, params, nullptr, cfg));
    if (hooks.observe_macro) hooks.observe_macro(0, s);
    if (detail::snapshot_due(s.t, cfg.time.dt, cfg.time.snapshot_times)) {
        if (hooks.collect_snapshots) res.snapshots.emplace_back(s.t, s.c);
        if (!hooks.out_dir.empty())
            detail::write_snapshot_files(s.c, hooks.out_dir, s.t, cfg.output.formats);
    }

    const double dt = cfg.time.dt;
    const double sstab = params.stab;
    const double eps = params.eps_model;
    const double e2 = eps * eps;
    std::vector<double> wx(grid.cells()), wy(grid.cells()), l1(grid.cells()), l2(grid.cells());

    for (long step = 1; step <= n_steps; ++step) {
        try {
            // (1) macro chemical potential from the current c
            ScalarField lac = laplacian_weighted(s.c, A, bc);
            ScalarField wb(grid);
            for (int k = 0; k < grid.cells(); ++k)
                wb.v[k] = bulk_force(s.c.v[k], params.b) - params.a * lac.v[k];

            // (2) Darcy velocity; with K absent the macro flow is zero
            if (eff.K) {
                const Tensor2 K = *eff.K;
                VectorField gw = gradient(wb, bc);
                VectorField q(grid);
                for (int k = 0; k < grid.cells(); ++k) {
                    const double fx = eps * params.lambda * s.c.v[k] * gw.x[k];
                    const double fy = eps * params.lambda * s.c.v[k] * gw.y[k];
                    q.x[k] = K.xx * fx + K.xy * fy;
                    q.y[k] = K.yx * fx + K.yy * fy;
                }
                ScalarField rhs = divergence(q, bc.conjugate());
                for (double& v : rhs.v) v = -v;
                CGStats pst;
                s.p = solve_poisson_weighted(rhs, K, bc, cfg.solver.proj_tol,
                                             cfg.solver.compat_tol, &s.p, &pst);
                sum.max_poisson_iterations = std::max(sum.max_poisson_iterations, pst.iterations);
                VectorField gp = gradient(s.p, bc);
                for (int k = 0; k < grid.cells(); ++k) {
                    const double qx = gp.x[k] + eps * params.lambda * s.c.v[k] * gw.x[k];
                    const double qy = gp.y[k] + eps * params.lambda * s.c.v[k] * gw.y[k];
                    s.u_bar.x[k] = -(K.xx * qx + K.xy * qy) / params.mu;
                    s.u_bar.y[k] = -(K.yx * qx + K.yy * qy) / params.mu;
                }
                // mu div(u_bar) = -(div(K grad p) + div(K lambda c grad w)) = Darcy residual
                sum.max_div_norm = std::max(sum.max_div_norm, pst.rel_residual);
            }

            // (3) CH update: theta (c+ - c)/dt + ubar.grad c = div(A grad w+),
            //     w+ = -a div(A grad c+) + f(c) + s (c+ - c)
            ScalarField adv = advect_upwind(s.c, s.u_bar, nullptr);
            ScalarField expl(grid);
            for (int k = 0; k < grid.cells(); ++k)
                expl.v[k] = bulk_force(s.c.v[k], params.b) - sstab * s.c.v[k];
            ScalarField lex = laplacian_weighted(expl, A, bc);
            std::vector<double> rhs(grid.cells());
            for (int k = 0; k < grid.cells(); ++k)
                rhs[k] = theta * s.c.v[k] - dt * eps * adv.v[k] + dt * e2 * lex.v[k];

            auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
                detail::laplacian_weighted_kernel(in, grid, bc, A, wx, wy, l1);
                detail::laplacian_weighted_kernel(l1, grid, bc, A, wx, wy, l2);
                for (int k = 0; k < grid.cells(); ++k)
                    out[k] = theta * in[k] + dt * e2 * (params.a * l2[k] - sstab * l1[k]);
            };
            ScalarField c_new = s.c;  // warm start
            CGStats cgst = conjugate_gradient(apply, rhs, c_new.v, grid, nullptr,
                                              cfg.solver.cg_tol, cg_max_iterations(grid));
            if (!cgst.converged)
                throw SolverError("macro CH solve stalled", cgst.rel_residual, cgst.iterations);
            sum.max_ch_iterations = std::max(sum.max_ch_iterations, cgst.iterations);

            const double target =
                theta * masked_sum(s.c, nullptr) - dt * eps * masked_sum(adv, nullptr);
            const double shift = (target / theta - masked_sum(c_new, nullptr)) / grid.cells();
            for (double& v : c_new.v) v += shift;

            ScalarField lac2 = laplacian_weighted(c_new, A, bc);
            for (int k = 0; k < grid.cells(); ++k)
                s.w_bar.v[k] = -params.a * lac2.v[k] + bulk_force(s.c.v[k], params.b) +
                               sstab * (c_new.v[k] - s.c.v[k]);
            s.c = std::move(c_new);
            s.t += dt;
        } catch (const std::exception& e) {
            if (!hooks.out_dir.empty())
                write_field_snapshot(s.c, hooks.out_dir + "/abort_c.raw", SnapshotFormat::raw);
            std::ostringstream os;
            os << "run_macro: step " << step << " failed: " << e.what();
            if (dynamic_cast<const SolverError*>(&e)) throw SolverError(os.str(), 0.0, 0);
            throw std::runtime_error(os.str());
        }

        if (step % cfg.time.record_every == 0) {
            res.records.push_back(make_record(s.t, s.c, s.u_bar, params, nullptr, cfg));
            if (hooks.observe_macro) hooks.observe_macro(static_cast<int>(step), s);
        }
        if (detail::snapshot_due(s.t, cfg.time.dt, cfg.time.snapshot_times)) {
            if (hooks.collect_snapshots) res.snapshots.emplace_back(s.t, s.c);
            if (!hooks.out_dir.empty())
                detail::write_snapshot_files(s.c, hooks.out_dir, s.t, cfg.output.formats);
        }
    }

    sum.mass_final = kinetic_energy_and_mass(s.u_bar, s.c, nullptr).second;
    sum.mass_drift_rel =
        std::fabs(sum.mass_final - sum.mass_initial) / std::max(1e-300, std::fabs(sum.mass_initial));

    std::ostringstream os;
    os << res.log;
    os << "-- summary --\n";
    os << "steps = " << n_steps << "\n";
    os << "mass drift (relative) = " << sum.mass_drift_rel << "\n";
    os << "max Darcy solve relative residual = " << sum.max_div_norm << "\n";
    res.log = os.str();

    res.state = std::move(s);
    if (!hooks.out_dir.empty()) {
        write_timeseries_csv(res.records, hooks.out_dir + "/timeseries.csv");
        write_text(hooks.out_dir + "/run.log", res.log);
    }
    return res;
}

// -- micro/macro comparison ---------------------------------------------------

struct ConvergenceReport {
    struct Row {
        double epsilon = 0.0;
        double l2_space_time = 0.0;
        double final_time_error = 0.0;
    };
    std::vector<Row> rows;
    std::vector<std::pair<double, std::string>> failures;
    std::string metadata;
};

/// Pore-averages of micro c over full eps-cells, compared against the macro
/// solution probed at the eps-cell centers, at every recorded step.
inline ConvergenceReport compare_micro_macro(const SimConfig& base_cfg,
                                             const std::vector<double>& eps_list) {
    require(!eps_list.empty(), "compare_micro_macro: empty eps list");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        require(eps_list[k] < eps_list[k - 1], "compare_micro_macro: eps list must be strictly decreasing");

    ConvergenceReport report;
    {
        std::ostringstream os;
        os << "base grid " << base_cfg.grid.nx << "x" << base_cfg.grid.ny << " on ["
           << base_cfg.grid.lx << "," << base_cfg.grid.ly << "], geometry "
           << base_cfg.geometry.shape << ", a = " << base_cfg.params.a
           << ", b = " << base_cfg.params.b << ", dt = " << base_cfg.time.dt
           << ", T = " << base_cfg.time.t_end
           << ", points/period = " << base_cfg.compare.points_per_period;
        report.metadata = os.str();
    }

    // ---- effective tensors, assembled once ----
    HomogenizeOptions hopt;
    hopt.cg_tol = 1e-10;
    hopt.steady_tol = base_cfg.solver.steady_tol;
    hopt.corrector = base_cfg.solver.corrector == "on";
    hopt.xi_source = base_cfg.solver.xi_source;
    const EffectiveTensors eff = assemble_effective(base_cfg.geometry.cell_n,
                                                    base_cfg.cell_geometry(), hopt);

    // ---- per-eps runs ----
    const double lx = base_cfg.grid.lx, ly = base_cfg.grid.ly;
    const int ppp = base_cfg.compare.points_per_period;
    const double dt_rec = base_cfg.time.dt * base_cfg.time.record_every;

    for (double eps : eps_list) {
        SimConfig cfg = base_cfg;
        if (base_cfg.compare.sweep_model_eps == "on") cfg.params.eps_model = eps;
        cfg.geometry.eps_geom = eps;
        cfg.grid.nx = static_cast<int>(std::ceil(ppp * lx / eps));
        cfg.grid.ny = static_cast<int>(std::ceil(ppp * ly / eps));
        // mixed noise stays sampled on the base lattice so initial data match
        const int snx = base_cfg.grid.nx, sny = base_cfg.grid.ny;

        const int ncx = static_cast<int>(std::floor(lx / eps + 1e-9));
        const int ncy = static_cast<int>(std::floor(ly / eps + 1e-9));

        try {
            // macro reference on the shared clock: the upscaled system carries
            // the same eps_model, i.e. the eps-free model time-dilated
            SimConfig macro_cfg = base_cfg;
            macro_cfg.params.eps_model = cfg.params.eps_model;
            std::vector<ScalarField> macro_samples;
            RunHooks macro_hooks;
            macro_hooks.observe_macro = [&](int, const MacroState& st) {
                macro_samples.push_back(st.c);
            };
            run_macro(macro_cfg, eff, macro_hooks);

            const Grid2D mg = build_grid(cfg.grid.nx, cfg.grid.ny, lx, ly);
            const PoreMask mask = build_pore_mask(mg, cfg.cell_geometry(), eps);

            // micro-cell -> eps-cell index map and pore counts per eps-cell
            std::vector<int> cell_of(mg.cells(), -1);
            std::vector<int> pore_per(ncx * ncy, 0);
            for (int j = 0; j < mg.ny; ++j)
                for (int i = 0; i < mg.nx; ++i) {
                    if (mask.solid(i, j)) continue;
                    const int k1 = static_cast<int>(std::floor(mg.xc(i) / eps));
                    const int k2 = static_cast<int>(std::floor(mg.yc(j) / eps));
                    if (k1 >= ncx || k2 >= ncy) continue;
                    cell_of[mg.idx(i, j)] = k2 * ncx + k1;
                    ++pore_per[k2 * ncx + k1];
                }

            double err2 = 0.0, final_err2 = 0.0;
            std::size_t sample_idx = 0;
            RunHooks hooks;
            hooks.observe_micro = [&](int, const MicroState& st) {
                if (sample_idx >= macro_samples.size()) return;
                const ScalarField& mc = macro_samples[sample_idx];
                std::vector<double> avg(ncx * ncy, 0.0);
                for (int k = 0; k < mg.cells(); ++k)
                    if (cell_of[k] >= 0) avg[cell_of[k]] += st.c.v[k];
                double step_err2 = 0.0;
                for (int k2 = 0; k2 < ncy; ++k2)
                    for (int k1 = 0; k1 < ncx; ++k1) {
                        const int kc = k2 * ncx + k1;
                        if (pore_per[kc] == 0) continue;
                        const double a = avg[kc] / pore_per[kc];
                        const double m = detail::bilinear_probe(mc.v, mc.grid, (k1 + 0.5) * eps,
                                                                (k2 + 0.5) * eps);
                        step_err2 += (a - m) * (a - m) * eps * eps;
                    }
                err2 += step_err2 * dt_rec;
                final_err2 = step_err2;
                ++sample_idx;
            };

            // rebuild the initial noise on the base lattice
            SimConfig run_cfg = cfg;
            MicroState init;
            init.t = 0.0;
            init.c = initial_concentration(run_cfg, mg, snx, sny);
            BoundarySpec bc_c = BoundarySpec::neumann(&mask);
            init.w = chemical_potential(init.c, run_cfg.physical(), bc_c);
            init.u = initial_velocity(run_cfg, mg, &mask);
            init.p = ScalarField(mg, run_cfg.params.p_init);
            run_micro(run_cfg, hooks, &init);

            ConvergenceReport::Row row;
            row.epsilon = eps;
            row.l2_space_time = std::sqrt(err2);
            row.final_time_error = std::sqrt(final_err2);
            if (!std::isfinite(row.l2_space_time) || !std::isfinite(row.final_time_error))
                throw std::runtime_error("non-finite comparison error");
            report.rows.push_back(row);
        } catch (const std::exception& e) {
            report.failures.emplace_back(eps, e.what());
        }
    }
    return report;
}

// -- checkpoints ---------------------------------------------------------------

inline void write_checkpoint(const std::string& path, const MicroState& s) {
    write_checkpoint(path, s.t, s.c.grid, {&s.c.v, &s.w.v, &s.u.x, &s.u.y, &s.p.v});
}

inline MicroState read_micro_checkpoint(const std::string& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.fields.size() != 5) throw std::runtime_error("checkpoint: expected 5 fields");
    MicroState s;
    s.t = ck.t;
    s.c = ScalarField(ck.grid);
    s.c.v = ck.fields[0];
    s.w = ScalarField(ck.grid);
    s.w.v = ck.fields[1];
    s.u = VectorField(ck.grid);
    s.u.x = ck.fields[2];
    s.u.y = ck.fields[3];
    s.p = ScalarField(ck.grid);
    s.p.v = ck.fields[4];
    return s;
}

inline void write_checkpoint(const std::string& path, const MacroState& s) {
    write_checkpoint(path, s.t, s.c.grid, {&s.c.v, &s.w_bar.v, &s.u_bar.x, &s.u_bar.y, &s.p.v});
}

inline MacroState read_macro_checkpoint(const std::string& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.fields.size() != 5) throw std::runtime_error("checkpoint: expected 5 fields");
    MacroState s;
    s.t = ck.t;
    s.c = ScalarField(ck.grid);
    s.c.v = ck.fields[0];
    s.w_bar = ScalarField(ck.grid);
    s.w_bar.v = ck.fields[1];
    s.u_bar = VectorField(ck.grid);
    s.u_bar.x = ck.fields[2];
    s.u_bar.y = ck.fields[3];
    s.p = ScalarField(ck.grid);
    s.p.v = ck.fields[4];
    return s;
}

}  // namespace schf
