#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "schf/sim.hpp"

using namespace schf;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("schf_sim_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

SimConfig small_config() {
    SimConfig cfg = parse_config_text(
        "grid.nx = 32\ngrid.ny = 32\n"
        "time.dt = 5e-3\ntime.t_end = 0.05\ntime.snapshot_times = 0.025\n"
        "params.eps_model = 0.2\n");
    return cfg;
}

}  // namespace

TEST_CASE("one-step run from the uniform stationary state", "[sim]") {
    SimConfig cfg = parse_config_text(
        "grid.nx = 32\ngrid.ny = 32\ntime.dt = 5e-3\ntime.t_end = 5e-3\n"
        "time.snapshot_times = \nparams.eps_model = 0.2\nic.mode = uniform\nic.value = 0.5\n");
    MicroRunResult res = run_micro(cfg);
    double dev = 0.0;
    for (double v : res.state.c.v) dev = std::max(dev, std::fabs(v - 0.5));
    CHECK(dev < 1e-12);
    CHECK(l2_norm(res.state.u) < 1e-12);
    REQUIRE(res.records.size() == 2);
}

TEST_CASE("micro run artifacts are deterministic", "[sim]") {
    SimConfig cfg = small_config();
    RunHooks h1, h2;
    h1.out_dir = temp_dir("det1");
    h2.out_dir = temp_dir("det2");
    run_micro(cfg, h1);
    run_micro(cfg, h2);
    CHECK(slurp(h1.out_dir + "/timeseries.csv") == slurp(h2.out_dir + "/timeseries.csv"));
    CHECK(slurp(h1.out_dir + "/c_t0.025.raw") == slurp(h2.out_dir + "/c_t0.025.raw"));
    CHECK(slurp(h1.out_dir + "/c_t0.025.pgm") == slurp(h2.out_dir + "/c_t0.025.pgm"));
}

TEST_CASE("micro mass drift stays tiny over a short run", "[sim]") {
    MicroRunResult res = run_micro(small_config());
    CHECK(res.summary.mass_drift_rel <= 1e-10);
    CHECK(res.summary.max_div_norm <= 1e-8);
}

TEST_CASE("run log carries the declared modeling decisions", "[sim]") {
    SimConfig cfg = small_config();
    RunHooks h;
    h.out_dir = temp_dir("log");
    run_micro(cfg, h);
    const std::string log = slurp(h.out_dir + "/run.log");
    CHECK(log.find("quasi-steady Darcy") != std::string::npos);
    CHECK(log.find("flux-repaired trace problem") != std::string::npos);
    CHECK(log.find("corrector mode = on") != std::string::npos);
    CHECK(log.find("p_init") != std::string::npos);
    CHECK(log.find("-- resolved config --") != std::string::npos);
    CHECK(log.find("grid.nx = 32") != std::string::npos);
}

TEST_CASE("time-shift consistency: T equals T/2 + checkpoint + T/2 bit-exactly", "[sim]") {
    SimConfig cfg = small_config();
    cfg.time.t_end = 0.1;

    MicroRunResult full = run_micro(cfg);

    SimConfig half = cfg;
    half.time.t_end = 0.05;
    MicroRunResult part1 = run_micro(half);

    const std::string ck = temp_dir("ck") + "/state.ck";
    write_checkpoint(ck, part1.state);
    MicroState resumed = read_micro_checkpoint(ck);
    CHECK(resumed.t == part1.state.t);

    MicroRunResult part2 = run_micro(cfg, {}, &resumed);
    REQUIRE(part2.state.c.v == full.state.c.v);
    REQUIRE(part2.state.w.v == full.state.w.v);
    REQUIRE(part2.state.u.x == full.state.u.x);
    REQUIRE(part2.state.u.y == full.state.u.y);
    REQUIRE(part2.state.p.v == full.state.p.v);
}

TEST_CASE("macro with identity tensors and no flow reduces to plain CH", "[sim]") {
    SimConfig cfg = parse_config_text(
        "grid.nx = 32\ngrid.ny = 32\ntime.dt = 5e-3\ntime.t_end = 0.05\n"
        "time.snapshot_times = \nic.mode = uniform\nic.value = 0.5\n");
    EffectiveTensors eff;  // theta = 1, A = I, K absent
    MacroRunResult res = run_macro(cfg, eff);
    double dev = 0.0;
    for (double v : res.state.c.v) dev = std::max(dev, std::fabs(v - 0.5));
    CHECK(dev < 1e-12);
    CHECK(l2_norm(res.state.u_bar) == 0.0);
}

TEST_CASE("macro run with disk tensors conserves mass and stays finite", "[sim]") {
    SimConfig cfg = parse_config_text(
        "grid.nx = 48\ngrid.ny = 40\ntime.dt = 5e-3\ntime.t_end = 0.1\n"
        "time.snapshot_times = \nparams.a = 10\nparams.b = 1\nic.mode = mixed\nic.seed = 4\n");
    EffectiveTensors eff = assemble_effective(32, CellGeometry::disk(0.25));
    MacroRunResult res = run_macro(cfg, eff);
    CHECK(res.summary.mass_drift_rel <= 1e-9);
    CHECK(res.state.c.finite());
    // Darcy flow is active
    CHECK(l2_norm(res.state.u_bar) > 0.0);
    // the K-weighted pressure solve meets its residual tolerance every step
    CHECK(res.summary.max_div_norm <= cfg.solver.proj_tol);
}

TEST_CASE("macro time-shift consistency through checkpoints", "[sim]") {
    SimConfig cfg = parse_config_text(
        "grid.nx = 32\ngrid.ny = 32\ntime.dt = 5e-3\ntime.t_end = 0.06\n"
        "time.snapshot_times = \nic.mode = mixed\nic.seed = 9\n");
    EffectiveTensors eff = assemble_effective(32, CellGeometry::disk(0.25));
    MacroRunResult full = run_macro(cfg, eff);

    SimConfig half = cfg;
    half.time.t_end = 0.03;
    MacroRunResult part1 = run_macro(half, eff);
    const std::string ck = temp_dir("mck") + "/state.ck";
    write_checkpoint(ck, part1.state);
    MacroState resumed = read_macro_checkpoint(ck);
    MacroRunResult part2 = run_macro(cfg, eff, {}, &resumed);
    REQUIRE(part2.state.c.v == full.state.c.v);
    REQUIRE(part2.state.p.v == full.state.p.v);
}

TEST_CASE("compare: single entry produces one row", "[sim]") {
    SimConfig cfg = parse_config_text(
        "grid.nx = 24\ngrid.ny = 20\ntime.dt = 5e-3\ntime.t_end = 0.05\n"
        "time.snapshot_times = \ngeometry.cell_n = 32\nic.mode = cosine\nic.amplitude = 0.2\n"
        "compare.points_per_period = 8\n");
    ConvergenceReport rep = compare_micro_macro(cfg, {0.2});
    CHECK(rep.failures.empty());
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].epsilon == 0.2);
    CHECK(std::isfinite(rep.rows[0].l2_space_time));
}

TEST_CASE("compare: empty geometry with fixed model eps matches macro closely", "[sim]") {
    // same equations on both scales when theta = 1, A = I and the flow is off
    SimConfig cfg = parse_config_text(
        "grid.nx = 48\ngrid.ny = 40\ntime.dt = 5e-3\ntime.t_end = 0.25\n"
        "time.snapshot_times = \ngeometry.shape = empty\ngeometry.eps_geom = 0.2\n"
        "geometry.cell_n = 32\nparams.eps_model = 1\nparams.lambda = 1e-8\n"
        "ic.mode = cosine\nic.amplitude = 0.2\n"
        "compare.points_per_period = 8\ncompare.sweep_model_eps = off\n");
    ConvergenceReport rep = compare_micro_macro(cfg, {0.2});
    REQUIRE(rep.rows.size() == 1);
    // errors normalized against the solution scale (||c|| ~ 0.5 * |Omega|^(1/2))
    const double norm = 0.5 * std::sqrt(1.2 * (cfg.time.t_end + cfg.time.dt));
    CHECK(rep.rows[0].l2_space_time < 1e-2 * norm);
}

TEST_CASE("compare rejects a non-decreasing eps list", "[sim]") {
    SimConfig cfg = small_config();
    CHECK_THROWS_AS(compare_micro_macro(cfg, {0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(compare_micro_macro(cfg, {}), std::invalid_argument);
}

TEST_CASE("aborting runs dump the last-good state", "[sim]") {
    SimConfig cfg = small_config();
    cfg.time.dt = 1000.0;  // far beyond the explicit stability bound: blows up
    cfg.time.t_end = 20000.0;
    cfg.time.snapshot_times.clear();
    RunHooks h;
    h.out_dir = temp_dir("abort");
    try {
        run_micro(cfg, h);
        FAIL("expected the run to abort");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    CHECK(std::filesystem::exists(h.out_dir + "/abort_c.raw"));
}
