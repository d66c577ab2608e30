// Command-line entry points: micro/macro simulation runs, cell-problem
// tensor assembly, micro-vs-macro epsilon sweeps, and snapshot probing.

#include <CLI11.hpp>
#include <iostream>

#include "schf/sim.hpp"

namespace {

schf::SimConfig load_config(const std::string& path) {
    if (path.empty()) {
        schf::SimConfig cfg;
        schf::finalize_config(cfg);
        return cfg;
    }
    return schf::parse_config_file(path);
}

schf::HomogenizeOptions homog_options(const schf::SimConfig& cfg) {
    schf::HomogenizeOptions opt;
    opt.cg_tol = std::min(1e-10, cfg.solver.cg_tol);
    opt.steady_tol = cfg.solver.steady_tol;
    opt.proj_tol = cfg.solver.proj_tol;
    opt.corrector = cfg.solver.corrector == "on";
    opt.xi_source = cfg.solver.xi_source;
    return opt;
}

std::string tensors_text(const schf::EffectiveTensors& eff) {
    std::ostringstream os;
    os << "effective tensors (cell grid " << eff.cell_n << "x" << eff.cell_n << ")\n";
    os << "theta = " << eff.theta << "\n";
    os << "A_eff = [" << eff.A_eff.xx << ", " << eff.A_eff.xy << "; " << eff.A_eff.yx << ", "
       << eff.A_eff.yy << "]  (asymmetry " << eff.A_asymmetry << ")\n";
    if (eff.K)
        os << "K = [" << eff.K->xx << ", " << eff.K->xy << "; " << eff.K->yx << ", " << eff.K->yy
           << "]  (asymmetry " << eff.K_asymmetry << ", mu = 1 normalization)\n";
    else
        os << "K = absent: " << eff.K_absent_reason << "\n";
    if (eff.xi)
        os << "xi: residual " << eff.xi->residual << ", boundary flux " << eff.xi->boundary_flux
           << ", |Gamma| " << eff.xi->gamma_length << ", Hessian defect " << eff.xi->hessian_defect
           << "\n";
    else
        os << "xi = absent (empty geometry has no internal boundary)\n";
    return os.str();
}

std::string tensors_csv(const schf::EffectiveTensors& eff) {
    using schf::format_sci;
    std::ostringstream os;
    os << "quantity,value\n";
    os << "theta," << format_sci(eff.theta) << "\n";
    os << "A_xx," << format_sci(eff.A_eff.xx) << "\n";
    os << "A_xy," << format_sci(eff.A_eff.xy) << "\n";
    os << "A_yx," << format_sci(eff.A_eff.yx) << "\n";
    os << "A_yy," << format_sci(eff.A_eff.yy) << "\n";
    os << "A_asymmetry," << format_sci(eff.A_asymmetry) << "\n";
    if (eff.K) {
        os << "K_xx," << format_sci(eff.K->xx) << "\n";
        os << "K_xy," << format_sci(eff.K->xy) << "\n";
        os << "K_yx," << format_sci(eff.K->yx) << "\n";
        os << "K_yy," << format_sci(eff.K->yy) << "\n";
        os << "K_asymmetry," << format_sci(eff.K_asymmetry) << "\n";
    } else {
        os << "K_xx,absent\n";
    }
    if (eff.xi) {
        os << "xi_flux," << format_sci(eff.xi->boundary_flux) << "\n";
        os << "xi_gamma_length," << format_sci(eff.xi->gamma_length) << "\n";
        os << "xi_hessian_defect," << format_sci(eff.xi->hessian_defect) << "\n";
    }
    return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"schf: two-phase Stokes-Cahn-Hilliard flow in a perforated medium"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string geometry = "disk", orientation = "y", corrector = "on";
    double radius = 0.25, height = 0.5, xi_source = 2.0;
    int cell_n = 128;
    std::string eps_csv, snapshot_path, point_csv;
    double lx = 1.2, ly = 1.0;

    auto* micro = app.add_subcommand("micro", "run the microscale solver");
    micro->add_option("--config", config_path, "config file (defaults when omitted)");
    micro->add_option("--out", out_dir, "output directory");

    auto* macro = app.add_subcommand("macro", "run the upscaled solver");
    macro->add_option("--config", config_path, "config file (defaults when omitted)");
    macro->add_option("--out", out_dir, "output directory");

    auto* cell = app.add_subcommand("cell", "solve the cell problems and report tensors");
    cell->add_option("--geometry", geometry, "empty | disk | slab");
    cell->add_option("--radius", radius, "disk radius (fraction of Y)");
    cell->add_option("--height", height, "slab thickness (fraction of Y)");
    cell->add_option("--orientation", orientation, "slab normal axis: x | y");
    cell->add_option("--n", cell_n, "cell grid resolution");
    cell->add_option("--corrector", corrector, "on | off");
    cell->add_option("--xi-source", xi_source, "source d of the xi trace problem (1 or 2)");
    cell->add_option("--out", out_dir, "output directory");

    auto* compare = app.add_subcommand("compare", "micro-vs-macro epsilon sweep");
    compare->add_option("--config", config_path, "base config file");
    compare->add_option("--eps", eps_csv, "comma-separated decreasing scales")->required();
    compare->add_option("--out", out_dir, "output directory");

    auto* probe_cmd = app.add_subcommand("probe", "interpolate a raw snapshot at a point");
    probe_cmd->add_option("--snapshot", snapshot_path, "SCHF raw snapshot")->required();
    probe_cmd->add_option("--point", point_csv, "x,y probe location")->required();
    probe_cmd->add_option("--lx", lx, "domain extent in x");
    probe_cmd->add_option("--ly", ly, "domain extent in y");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (micro->parsed()) {
            schf::SimConfig cfg = load_config(config_path);
            schf::RunHooks hooks;
            hooks.out_dir = out_dir;
            schf::MicroRunResult res = schf::run_micro(cfg, hooks);
            std::cout << "micro run complete: " << res.records.size() << " records, mass drift "
                      << res.summary.mass_drift_rel << ", max ||div u|| "
                      << res.summary.max_div_norm << "\n";
            return 0;
        }
        if (macro->parsed()) {
            schf::SimConfig cfg = load_config(config_path);
            // the reference macro potential is a = 10, b = 1 unless set explicitly
            if (!cfg.a_set) cfg.params.a = 10.0;
            if (!cfg.b_set) {
                cfg.params.b = 1.0;
                cfg.params.stab = schf::PhysicalParams::default_stab(cfg.params.b);
            }
            schf::validate_config(cfg);
            schf::EffectiveTensors eff =
                schf::assemble_effective(cfg.geometry.cell_n, cfg.cell_geometry(), homog_options(cfg));
            schf::RunHooks hooks;
            hooks.out_dir = out_dir;
            schf::MacroRunResult res = schf::run_macro(cfg, eff, hooks);
            schf::write_text(out_dir + "/tensors.txt", tensors_text(eff));
            std::cout << "macro run complete: " << res.records.size() << " records, mass drift "
                      << res.summary.mass_drift_rel << "\n";
            return 0;
        }
        if (cell->parsed()) {
            schf::SimConfig cfg;
            cfg.geometry.shape = geometry;
            cfg.geometry.radius = radius;
            cfg.geometry.height = height;
            cfg.geometry.orientation = orientation;
            cfg.geometry.cell_n = cell_n;
            cfg.solver.corrector = corrector;
            cfg.solver.xi_source = xi_source;
            schf::finalize_config(cfg);
            schf::EffectiveTensors eff =
                schf::assemble_effective(cell_n, cfg.cell_geometry(), homog_options(cfg));
            const std::string text = tensors_text(eff);
            std::cout << text;
            std::filesystem::create_directories(out_dir);
            schf::write_text(out_dir + "/tensors.txt",
                             schf::run_log_header(cfg, "cell") + "-- tensors --\n" + text);
            schf::write_text(out_dir + "/tensors.csv", tensors_csv(eff));
            return 0;
        }
        if (compare->parsed()) {
            schf::SimConfig cfg = load_config(config_path);
            std::vector<double> eps_list;
            for (const auto& tok : schf::detail::split(eps_csv, ','))
                eps_list.push_back(schf::detail::parse_double(tok, "--eps", 0));
            schf::ConvergenceReport rep = schf::compare_micro_macro(cfg, eps_list);
            std::filesystem::create_directories(out_dir);
            std::string csv = "eps,l2_space_time,final_time\n";
            for (const auto& row : rep.rows)
                csv += schf::format_sci(row.epsilon) + "," + schf::format_sci(row.l2_space_time) +
                       "," + schf::format_sci(row.final_time_error) + "\n";
            schf::write_text(out_dir + "/report.csv", csv);
            std::ostringstream txt;
            txt << schf::run_log_header(cfg, "compare") << "-- comparison --\n"
                << rep.metadata << "\n"
                << csv;
            for (const auto& f : rep.failures)
                txt << "failed eps = " << f.first << ": " << f.second << "\n";
            schf::write_text(out_dir + "/report.txt", txt.str());
            std::cout << csv;
            for (const auto& f : rep.failures)
                std::cerr << "failed eps = " << f.first << ": " << f.second << "\n";
            return rep.rows.empty() ? 2 : 0;
        }
        if (probe_cmd->parsed()) {
            const auto xy = schf::detail::split(point_csv, ',');
            if (xy.size() != 2) throw schf::ConfigError("--point must be 'x,y'");
            const double px = schf::detail::parse_double(xy[0], "--point", 0);
            const double py = schf::detail::parse_double(xy[1], "--point", 0);
            schf::ScalarField f = schf::read_field_raw(snapshot_path, lx, ly);
            schf::ProbeValue v = schf::probe(f, px, py);
            std::cout << schf::format_sci(v.value) << "\n";
            return 0;
        }
    } catch (const schf::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    } catch (const schf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

#ifndef SCHF_CLI_NO_MAIN
int main(int argc, char** argv) { return run_cli(argc, argv); }
#endif
