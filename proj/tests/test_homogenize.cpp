#include <catch2/catch_amalgamated.hpp>

#include "schf/homogenize.hpp"

using namespace schf;

TEST_CASE("corrector is zero for the empty cell", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    CellSolution chi = solve_corrector(g, CellGeometry::empty(), 0, 1e-10);
    CHECK(max_abs(chi.scalar) == 0.0);
    double asym = 0.0;
    Tensor2 a = effective_diffusion(chi, solve_corrector(g, CellGeometry::empty(), 1, 1e-10),
                                    CellGeometry::empty(), &asym);
    CHECK(a.xx == Catch::Approx(1.0).margin(1e-10));
    CHECK(a.yy == Catch::Approx(1.0).margin(1e-10));
    CHECK(std::fabs(a.xy) < 1e-10);
    CHECK(asym < 1e-12);
}

TEST_CASE("flow-aligned slab has no corrector and A_eff = diag(theta, ~0)", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    const CellGeometry slab = CellGeometry::slab(0.5);  // normal to y
    CellSolution chi1 = solve_corrector(g, slab, 0, 1e-10);
    CHECK(max_abs(chi1.scalar) == 0.0);

    CellSolution chi2 = solve_corrector(g, slab, 1, 1e-10);
    Tensor2 a = effective_diffusion(chi1, chi2, slab);
    CHECK(a.xx == Catch::Approx(0.5).margin(1e-10));
    CHECK(std::fabs(a.xy) < 1e-10);
    CHECK(a.yy < 0.02);  // cross-channel blocked up to staircase error
}

TEST_CASE("disk corrector has odd symmetry about the cell center", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    CellSolution chi1 = solve_corrector(g, CellGeometry::disk(0.25), 0, 1e-11);
    const PoreMask m = build_pore_mask(g, CellGeometry::disk(0.25), 1.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (m.solid(i, j)) continue;
            REQUIRE(chi1.scalar.at(i, j) ==
                    Catch::Approx(-chi1.scalar.at(g.nx - 1 - i, j)).margin(1e-8));
        }
    // mean-zero over the pore space
    CHECK(std::fabs(masked_mean(chi1.scalar, &m)) < 1e-12);
}

TEST_CASE("disk A_eff is isotropic with eigenvalues in (0, theta]", "[homogenize]") {
    Grid2D g = build_grid(96, 96, 1.0, 1.0);
    const CellGeometry disk = CellGeometry::disk(0.25);
    CellSolution chi1 = solve_corrector(g, disk, 0, 1e-11);
    CellSolution chi2 = solve_corrector(g, disk, 1, 1e-11);
    double asym = 0.0;
    Tensor2 a = effective_diffusion(chi1, chi2, disk, &asym);
    const double theta = porosity(build_pore_mask(g, disk, 1.0));

    CHECK(std::fabs(a.xx - a.yy) / a.xx < 0.01);
    CHECK(std::fabs(a.xy) <= 1e-3);
    CHECK(asym < 1e-6);
    auto [lo, hi] = a.sym_eigenvalues();
    CHECK(lo > 0.0);
    CHECK(hi <= theta + 1e-12);
}

TEST_CASE("xi requires an internal boundary", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    CHECK_THROWS_AS(solve_xi(g, CellGeometry::empty(), 1e-10), std::invalid_argument);
}

TEST_CASE("xi satisfies the discrete flux balance and disk symmetry", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    const CellGeometry disk = CellGeometry::disk(0.25);
    CellSolution xi = solve_xi(g, disk, 1e-11, 2.0);
    const PoreMask m = build_pore_mask(g, disk, 1.0);

    // compatibility identity: d |Y_p| = flux * |Gamma| by construction
    const double pore_area = m.pore_count() * g.cell_area();
    CHECK(2.0 * pore_area == Catch::Approx(xi.boundary_flux * xi.gamma_length).epsilon(1e-12));

    // summation by parts: the masked laplacian integrates to zero
    ScalarField lap = laplacian(xi.scalar, BoundarySpec::periodic_neumann(&m));
    CHECK(std::fabs(masked_sum(lap, &m) * g.cell_area()) < 1e-8);

    // four-fold symmetry of the geometry
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (m.solid(i, j)) continue;
            REQUIRE(xi.scalar.at(i, j) == Catch::Approx(xi.scalar.at(g.nx - 1 - i, j)).margin(1e-6));
            REQUIRE(xi.scalar.at(i, j) == Catch::Approx(xi.scalar.at(i, g.ny - 1 - j)).margin(1e-6));
            REQUIRE(xi.scalar.at(i, j) == Catch::Approx(xi.scalar.at(j, i)).margin(1e-6));
        }
    CHECK(std::fabs(masked_mean(xi.scalar, &m)) < 1e-12);
    CHECK(xi.hessian_defect > 0.0);  // the literal Hessian condition is unattainable
}

TEST_CASE("xi source is switchable between 2 and 1", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    CellSolution xi2 = solve_xi(g, CellGeometry::disk(0.25), 1e-11, 2.0);
    CellSolution xi1 = solve_xi(g, CellGeometry::disk(0.25), 1e-11, 1.0);
    CHECK(xi2.boundary_flux == Catch::Approx(2.0 * xi1.boundary_flux).epsilon(1e-12));
    // linear problem: xi scales with the source
    const PoreMask m = build_pore_mask(g, CellGeometry::disk(0.25), 1.0);
    for (int j = 0; j < g.ny; j += 7)
        for (int i = 0; i < g.nx; i += 7)
            if (m.pore(i, j))
                REQUIRE(xi2.scalar.at(i, j) == Catch::Approx(2.0 * xi1.scalar.at(i, j)).margin(1e-8));
}

TEST_CASE("permeability of the slab channel matches Poiseuille", "[homogenize]") {
    Grid2D g = build_grid(128, 128, 1.0, 1.0);
    const CellGeometry slab = CellGeometry::slab(0.5);
    HomogenizeOptions opt;
    CellSolution sol = solve_permeability(g, slab, 0, opt);
    const PoreMask m = build_pore_mask(g, slab, 1.0);
    double kxx = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (m.pore(i, j)) kxx += sol.velocity.x[g.idx(i, j)] * g.cell_area();
    const double exact = 0.5 * 0.5 * 0.5 / 12.0;
    CHECK(kxx == Catch::Approx(exact).epsilon(0.05));
}

TEST_CASE("permeability requires an obstacle", "[homogenize]") {
    Grid2D g = build_grid(64, 64, 1.0, 1.0);
    CHECK_THROWS_AS(solve_permeability(g, CellGeometry::empty(), 0), std::invalid_argument);
}

TEST_CASE("assemble_effective: empty geometry", "[homogenize]") {
    EffectiveTensors eff = assemble_effective(64, CellGeometry::empty());
    CHECK(eff.theta == 1.0);
    CHECK(eff.A_eff.xx == Catch::Approx(1.0).margin(1e-10));
    CHECK(eff.A_eff.yy == Catch::Approx(1.0).margin(1e-10));
    CHECK_FALSE(eff.K.has_value());
    CHECK_FALSE(eff.xi.has_value());
    CHECK_FALSE(eff.K_absent_reason.empty());
}

TEST_CASE("assemble_effective rejects small cell grids", "[homogenize]") {
    CHECK_THROWS_AS(assemble_effective(16, CellGeometry::disk(0.25)), std::invalid_argument);
}

TEST_CASE("assemble_effective: slab oracle values", "[homogenize]") {
    EffectiveTensors eff = assemble_effective(64, CellGeometry::slab(0.5));
    CHECK(eff.theta == 0.5);
    CHECK(eff.A_eff.xx == Catch::Approx(0.5).margin(1e-9));
    CHECK(eff.A_eff.yy < 0.02);
    REQUIRE(eff.K.has_value());
    CHECK(eff.K->xx == Catch::Approx(0.5 * 0.5 * 0.5 / 12.0).epsilon(0.05));
    CHECK(eff.xi.has_value());
}

TEST_CASE("assemble_effective: disk isotropy at 96", "[homogenize]") {
    EffectiveTensors eff = assemble_effective(96, CellGeometry::disk(0.25));
    CHECK(eff.theta == Catch::Approx(1.0 - M_PI / 16.0).epsilon(0.01));
    CHECK(std::fabs(eff.A_eff.xx - eff.A_eff.yy) / eff.A_eff.xx < 0.01);
    REQUIRE(eff.K.has_value());
    CHECK(std::fabs(eff.K->xx - eff.K->yy) / eff.K->xx < 0.01);
    CHECK(std::fabs(eff.K->xy) / eff.K->xx < 0.01);
    // permeability tensor is SPD for the connected pore space
    auto [klo, khi] = eff.K->sym_eigenvalues();
    CHECK(klo > 0.0);
}

TEST_CASE("corrector off reproduces theta-scaled identity", "[homogenize]") {
    HomogenizeOptions opt;
    opt.corrector = false;
    EffectiveTensors eff = assemble_effective(64, CellGeometry::disk(0.25), opt);
    CHECK(eff.A_eff.xx == Catch::Approx(eff.theta));
    CHECK(eff.A_eff.yy == Catch::Approx(eff.theta));
    CHECK(eff.A_eff.xy == 0.0);
}

TEST_CASE("effective tensors converge between successive grids", "[homogenize]") {
    // correctors compared at 128 -> 256, permeability at 64 -> 128
    const CellGeometry disk = CellGeometry::disk(0.25);
    Grid2D g128 = build_grid(128, 128, 1.0, 1.0);
    Grid2D g256 = build_grid(256, 256, 1.0, 1.0);
    Tensor2 a128 = effective_diffusion(solve_corrector(g128, disk, 0, 1e-11),
                                       solve_corrector(g128, disk, 1, 1e-11), disk);
    Tensor2 a256 = effective_diffusion(solve_corrector(g256, disk, 0, 1e-11),
                                       solve_corrector(g256, disk, 1, 1e-11), disk);
    CHECK(std::fabs(a256.xx - a128.xx) / a128.xx < 0.02);

    HomogenizeOptions opt;
    Grid2D g64 = build_grid(64, 64, 1.0, 1.0);
    const PoreMask m64 = build_pore_mask(g64, disk, 1.0);
    const PoreMask m128 = build_pore_mask(g128, disk, 1.0);
    CellSolution k64 = solve_permeability(g64, disk, 0, opt);
    CellSolution k128 = solve_permeability(g128, disk, 0, opt);
    double kxx64 = 0.0, kxx128 = 0.0;
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i)
            if (m64.pore(i, j)) kxx64 += k64.velocity.x[g64.idx(i, j)] * g64.cell_area();
    for (int j = 0; j < 128; ++j)
        for (int i = 0; i < 128; ++i)
            if (m128.pore(i, j)) kxx128 += k128.velocity.x[g128.idx(i, j)] * g128.cell_area();
    CHECK(std::fabs(kxx128 - kxx64) / kxx64 < 0.05);
}
