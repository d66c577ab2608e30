#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "schf/potential.hpp"

namespace schf {

/// Full run configuration. Defaults reproduce the reference setup: 128x128
/// grid on [0,1.2]x[0,1.0], dt = 5e-3, T = 25, a = 12, b = 2, lambda = 4e-2,
/// mu = 1e-2, eps = 5e-2, disk(0.25) perforation, mixed initial condition.
struct SimConfig {
    struct Gridc {
        int nx = 128, ny = 128;
        double lx = 1.2, ly = 1.0;
    } grid;

    struct Time {
        double dt = 5e-3;
        double t_end = 25.0;
        int record_every = 1;
        std::vector<double> snapshot_times = {0.025, 5.0, 10.0, 15.0, 20.0, 25.0};
    } time;

    struct Params {
        double a = 12.0, b = 2.0;
        double lambda = 4e-2;
        double mu = 1e-2;
        double eps_model = 5e-2;
        double rho = 1.0;
        double stab = -1.0;  // resolved to 64*b when unset
        double p_init = 0.05;
    } params;

    struct Geometry {
        std::string shape = "disk";  // empty | disk | slab
        double radius = 0.25;
        double height = 0.5;
        std::string orientation = "y";  // slab normal axis
        double eps_geom = -1.0;         // resolved to params.eps_model when unset
        int cell_n = 128;
    } geometry;

    struct Ic {
        std::string mode = "mixed";  // mixed | paper-literal | uniform | cosine
        unsigned long seed = 12345;
        double amplitude = 0.05;
        double value = 0.5;  // uniform mode
    } ic;

    struct Solver {
        double cg_tol = 1e-8;
        double proj_tol = 1e-8;
        double compat_tol = 1e-6;
        double steady_tol = 1e-5;
        std::string corrector = "on";  // on | off
        double xi_source = 2.0;
    } solver;

    std::vector<std::array<double, 2>> probes = {{0.2251, 0.1876}, {0.0111, 0.0093}};

    struct Output {
        std::string dir = "out";
        std::string formats = "pgm,raw";
        std::string length_mode = "levelset";  // levelset | energy_ratio
        double length_level = 0.5;
    } output;

    struct Compare {
        int points_per_period = 8;
        std::string sweep_model_eps = "on";  // off: keep params.eps_model fixed in sweeps
    } compare;

    bool a_set = false, b_set = false;  // whether the potential was given explicitly

    PhysicalParams physical() const {
        PhysicalParams p;
        p.a = params.a;
        p.b = params.b;
        p.lambda = params.lambda;
        p.mu = params.mu;
        p.eps_model = params.eps_model;
        p.rho = params.rho;
        p.stab = params.stab;
        return p;
    }

    CellGeometry cell_geometry() const {
        if (geometry.shape == "empty") return CellGeometry::empty();
        if (geometry.shape == "disk") return CellGeometry::disk(geometry.radius);
        if (geometry.shape == "slab")
            return CellGeometry::slab(geometry.height, geometry.orientation == "x"
                                                           ? CellGeometry::Axis::x
                                                           : CellGeometry::Axis::y);
        throw ConfigError("geometry.shape must be one of empty|disk|slab (got '" +
                          geometry.shape + "')");
    }

    bool operator==(const SimConfig& o) const {
        return grid.nx == o.grid.nx && grid.ny == o.grid.ny && grid.lx == o.grid.lx &&
               grid.ly == o.grid.ly && time.dt == o.time.dt && time.t_end == o.time.t_end &&
               time.record_every == o.time.record_every &&
               time.snapshot_times == o.time.snapshot_times && params.a == o.params.a &&
               params.b == o.params.b && params.lambda == o.params.lambda &&
               params.mu == o.params.mu && params.eps_model == o.params.eps_model &&
               params.rho == o.params.rho && params.stab == o.params.stab &&
               params.p_init == o.params.p_init && geometry.shape == o.geometry.shape &&
               geometry.radius == o.geometry.radius && geometry.height == o.geometry.height &&
               geometry.orientation == o.geometry.orientation &&
               geometry.eps_geom == o.geometry.eps_geom && geometry.cell_n == o.geometry.cell_n &&
               ic.mode == o.ic.mode && ic.seed == o.ic.seed && ic.amplitude == o.ic.amplitude &&
               ic.value == o.ic.value && solver.cg_tol == o.solver.cg_tol &&
               solver.proj_tol == o.solver.proj_tol && solver.compat_tol == o.solver.compat_tol &&
               solver.steady_tol == o.solver.steady_tol && solver.corrector == o.solver.corrector &&
               solver.xi_source == o.solver.xi_source && probes == o.probes &&
               output.dir == o.output.dir && output.formats == o.output.formats &&
               output.length_mode == o.output.length_mode &&
               output.length_level == o.output.length_level &&
               compare.points_per_period == o.compare.points_per_period &&
               compare.sweep_model_eps == o.compare.sweep_model_eps;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s, const std::string& key, int line) {
    char* end = nullptr;
    const std::string t = trim(s);
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
        std::ostringstream os;
        os << "line " << line << ": value '" << t << "' for " << key << " is not a number";
        throw ConfigError(os.str());
    }
    return v;
}

inline long parse_int(const std::string& s, const std::string& key, int line) {
    char* end = nullptr;
    const std::string t = trim(s);
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) {
        std::ostringstream os;
        os << "line " << line << ": value '" << t << "' for " << key << " is not an integer";
        throw ConfigError(os.str());
    }
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void validate_config(const SimConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.grid.nx < 1 || c.grid.ny < 1) fail("grid.nx and grid.ny must be >= 1");
    if (c.grid.lx <= 0 || c.grid.ly <= 0) fail("grid.lx and grid.ly must be positive");
    if (c.time.dt <= 0) fail("time.dt must be positive");
    if (c.time.t_end < c.time.dt) fail("time.t_end must be >= time.dt");
    if (c.time.record_every < 1) fail("time.record_every must be >= 1");
    for (double s : c.time.snapshot_times)
        if (s < 0 || s > c.time.t_end) fail("time.snapshot_times entries must lie in [0, t_end]");
    if (c.params.a <= 0 || c.params.b <= 0) fail("params.a and params.b must be positive");
    if (c.params.lambda <= 0) fail("params.lambda must be positive");
    if (c.params.mu <= 0) fail("params.mu must be positive");
    if (c.params.eps_model <= 0) fail("params.eps_model must be positive");
    if (c.params.rho != 1.0) fail("params.rho is fixed at 1");
    if (c.params.stab < 0) fail("params.stab must be >= 0");
    if (c.geometry.shape != "empty" && c.geometry.shape != "disk" && c.geometry.shape != "slab")
        fail("geometry.shape must be empty|disk|slab");
    if (c.geometry.radius < 0 || c.geometry.radius >= 0.5) fail("geometry.radius must be in [0, 0.5)");
    if (c.geometry.height < 0 || c.geometry.height >= 1.0) fail("geometry.height must be in [0, 1)");
    if (c.geometry.orientation != "x" && c.geometry.orientation != "y")
        fail("geometry.orientation must be x|y");
    if (c.geometry.eps_geom <= 0) fail("geometry.eps_geom must be positive");
    if (c.geometry.cell_n < 32) fail("geometry.cell_n must be >= 32");
    if (c.ic.mode != "mixed" && c.ic.mode != "paper-literal" && c.ic.mode != "uniform" &&
        c.ic.mode != "cosine")
        fail("ic.mode must be mixed|paper-literal|uniform|cosine");
    if (c.ic.amplitude < 0) fail("ic.amplitude must be >= 0");
    if (c.solver.cg_tol <= 0) fail("solver.cg_tol must be positive");
    if (c.solver.proj_tol <= 0) fail("solver.proj_tol must be positive");
    if (c.solver.compat_tol <= 0) fail("solver.compat_tol must be positive");
    if (c.solver.steady_tol <= 0) fail("solver.steady_tol must be positive");
    if (c.solver.corrector != "on" && c.solver.corrector != "off")
        fail("solver.corrector must be on|off");
    if (c.solver.xi_source != 1.0 && c.solver.xi_source != 2.0)
        fail("solver.xi_source must be 1 or 2");
    for (const auto& p : c.probes)
        if (p[0] < 0 || p[0] > c.grid.lx || p[1] < 0 || p[1] > c.grid.ly)
            fail("probes.points entries must lie inside the domain");
    if (c.output.length_mode != "levelset" && c.output.length_mode != "energy_ratio")
        fail("output.length_mode must be levelset|energy_ratio");
    if (c.output.length_level <= 0 || c.output.length_level >= 1)
        fail("output.length_level must lie in (0, 1)");
    if (c.compare.points_per_period < 2) fail("compare.points_per_period must be >= 2");
    if (c.compare.sweep_model_eps != "on" && c.compare.sweep_model_eps != "off")
        fail("compare.sweep_model_eps must be on|off");
}

/// Resolves derived defaults (stab = 64 b, eps_geom = eps_model) and validates.
inline void finalize_config(SimConfig& c) {
    if (c.params.stab < 0) c.params.stab = PhysicalParams::default_stab(c.params.b);
    if (c.geometry.eps_geom < 0) c.geometry.eps_geom = c.params.eps_model;
    validate_config(c);
}

/// Parses the flat `section.key = value` format. Unknown keys are errors.
inline SimConfig parse_config_text(const std::string& text) {
    SimConfig c;
    bool stab_seen = false, eps_geom_seen = false;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = detail::trim(raw);
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = detail::trim(s.substr(0, hash));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << line << ": expected 'section.key = value', got '" << s << "'";
            throw ConfigError(os.str());
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));

        auto d = [&] { return detail::parse_double(val, key, line); };
        auto n = [&] { return static_cast<int>(detail::parse_int(val, key, line)); };

        if (key == "grid.nx") c.grid.nx = n();
        else if (key == "grid.ny") c.grid.ny = n();
        else if (key == "grid.lx") c.grid.lx = d();
        else if (key == "grid.ly") c.grid.ly = d();
        else if (key == "time.dt") c.time.dt = d();
        else if (key == "time.t_end") c.time.t_end = d();
        else if (key == "time.record_every") c.time.record_every = n();
        else if (key == "time.snapshot_times") {
            c.time.snapshot_times.clear();
            if (!val.empty())
                for (const auto& tok : detail::split(val, ','))
                    c.time.snapshot_times.push_back(detail::parse_double(tok, key, line));
        } else if (key == "params.a") { c.params.a = d(); c.a_set = true; }
        else if (key == "params.b") { c.params.b = d(); c.b_set = true; }
        else if (key == "params.lambda") c.params.lambda = d();
        else if (key == "params.mu") c.params.mu = d();
        else if (key == "params.eps_model") c.params.eps_model = d();
        else if (key == "params.rho") c.params.rho = d();
        else if (key == "params.stab") { c.params.stab = d(); stab_seen = true; }
        else if (key == "params.p_init") c.params.p_init = d();
        else if (key == "geometry.shape") c.geometry.shape = val;
        else if (key == "geometry.radius") c.geometry.radius = d();
        else if (key == "geometry.height") c.geometry.height = d();
        else if (key == "geometry.orientation") c.geometry.orientation = val;
        else if (key == "geometry.eps_geom") { c.geometry.eps_geom = d(); eps_geom_seen = true; }
        else if (key == "geometry.cell_n") c.geometry.cell_n = n();
        else if (key == "ic.mode") c.ic.mode = val;
        else if (key == "ic.seed") c.ic.seed = static_cast<unsigned long>(detail::parse_int(val, key, line));
        else if (key == "ic.amplitude") c.ic.amplitude = d();
        else if (key == "ic.value") c.ic.value = d();
        else if (key == "solver.cg_tol") c.solver.cg_tol = d();
        else if (key == "solver.proj_tol") c.solver.proj_tol = d();
        else if (key == "solver.compat_tol") c.solver.compat_tol = d();
        else if (key == "solver.steady_tol") c.solver.steady_tol = d();
        else if (key == "solver.corrector") c.solver.corrector = val;
        else if (key == "solver.xi_source") c.solver.xi_source = d();
        else if (key == "probes.points") {
            c.probes.clear();
            if (!val.empty()) {
                for (const auto& pair : detail::split(val, ';')) {
                    if (pair.empty()) continue;
                    const auto xy = detail::split(pair, ',');
                    if (xy.size() != 2) {
                        std::ostringstream os;
                        os << "line " << line << ": probes.points entry '" << pair
                           << "' must be 'x,y'";
                        throw ConfigError(os.str());
                    }
                    c.probes.push_back({detail::parse_double(xy[0], key, line),
                                        detail::parse_double(xy[1], key, line)});
                }
            }
        } else if (key == "output.dir") c.output.dir = val;
        else if (key == "output.formats") c.output.formats = val;
        else if (key == "output.length_mode") c.output.length_mode = val;
        else if (key == "output.length_level") c.output.length_level = d();
        else if (key == "compare.points_per_period") c.compare.points_per_period = n();
        else if (key == "compare.sweep_model_eps") c.compare.sweep_model_eps = val;
        else {
            std::ostringstream os;
            os << "line " << line << ": unknown key '" << key << "'";
            throw ConfigError(os.str());
        }
    }
    if (!stab_seen) c.params.stab = -1.0;
    if (!eps_geom_seen) c.geometry.eps_geom = -1.0;
    finalize_config(c);
    return c;
}

inline SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str());
}

/// Writes the full resolved configuration; parse(serialize(c)) == c.
inline std::string serialize_config(const SimConfig& c) {
    using detail::fmt_g;
    std::ostringstream os;
    os << "grid.nx = " << c.grid.nx << "\n";
    os << "grid.ny = " << c.grid.ny << "\n";
    os << "grid.lx = " << fmt_g(c.grid.lx) << "\n";
    os << "grid.ly = " << fmt_g(c.grid.ly) << "\n";
    os << "time.dt = " << fmt_g(c.time.dt) << "\n";
    os << "time.t_end = " << fmt_g(c.time.t_end) << "\n";
    os << "time.record_every = " << c.time.record_every << "\n";
    os << "time.snapshot_times = ";
    for (std::size_t k = 0; k < c.time.snapshot_times.size(); ++k)
        os << (k ? "," : "") << fmt_g(c.time.snapshot_times[k]);
    os << "\n";
    os << "params.a = " << fmt_g(c.params.a) << "\n";
    os << "params.b = " << fmt_g(c.params.b) << "\n";
    os << "params.lambda = " << fmt_g(c.params.lambda) << "\n";
    os << "params.mu = " << fmt_g(c.params.mu) << "\n";
    os << "params.eps_model = " << fmt_g(c.params.eps_model) << "\n";
    os << "params.rho = " << fmt_g(c.params.rho) << "\n";
    os << "params.stab = " << fmt_g(c.params.stab) << "\n";
    os << "params.p_init = " << fmt_g(c.params.p_init) << "\n";
    os << "geometry.shape = " << c.geometry.shape << "\n";
    os << "geometry.radius = " << fmt_g(c.geometry.radius) << "\n";
    os << "geometry.height = " << fmt_g(c.geometry.height) << "\n";
    os << "geometry.orientation = " << c.geometry.orientation << "\n";
    os << "geometry.eps_geom = " << fmt_g(c.geometry.eps_geom) << "\n";
    os << "geometry.cell_n = " << c.geometry.cell_n << "\n";
    os << "ic.mode = " << c.ic.mode << "\n";
    os << "ic.seed = " << c.ic.seed << "\n";
    os << "ic.amplitude = " << fmt_g(c.ic.amplitude) << "\n";
    os << "ic.value = " << fmt_g(c.ic.value) << "\n";
    os << "solver.cg_tol = " << fmt_g(c.solver.cg_tol) << "\n";
    os << "solver.proj_tol = " << fmt_g(c.solver.proj_tol) << "\n";
    os << "solver.compat_tol = " << fmt_g(c.solver.compat_tol) << "\n";
    os << "solver.steady_tol = " << fmt_g(c.solver.steady_tol) << "\n";
    os << "solver.corrector = " << c.solver.corrector << "\n";
    os << "solver.xi_source = " << fmt_g(c.solver.xi_source) << "\n";
    os << "probes.points = ";
    for (std::size_t k = 0; k < c.probes.size(); ++k)
        os << (k ? "; " : "") << fmt_g(c.probes[k][0]) << "," << fmt_g(c.probes[k][1]);
    os << "\n";
    os << "output.dir = " << c.output.dir << "\n";
    os << "output.formats = " << c.output.formats << "\n";
    os << "output.length_mode = " << c.output.length_mode << "\n";
    os << "output.length_level = " << fmt_g(c.output.length_level) << "\n";
    os << "compare.points_per_period = " << c.compare.points_per_period << "\n";
    os << "compare.sweep_model_eps = " << c.compare.sweep_model_eps << "\n";
    return os.str();
}

}  // namespace schf
