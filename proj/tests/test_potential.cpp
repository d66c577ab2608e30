#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "schf/potential.hpp"

using namespace schf;

TEST_CASE("bulk energy values", "[potential]") {
    CHECK(bulk_energy(0.0, 2.0) == 0.0);
    CHECK(bulk_energy(1.0, 2.0) == 0.0);
    CHECK(bulk_energy(0.5, 2.0) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(bulk_energy(0.5, 1.0) == Catch::Approx(1.0).epsilon(1e-15));
    // F(0.5) = b exactly
    CHECK(bulk_energy(0.5, 7.25) == 7.25);
}

TEST_CASE("bulk force roots and values", "[potential]") {
    for (double b : {1.0, 2.0, 5.5}) {
        CHECK(std::fabs(bulk_force(0.0, b)) < 1e-14);
        CHECK(std::fabs(bulk_force(0.5, b)) < 1e-14);
        CHECK(std::fabs(bulk_force(1.0, b)) < 1e-14);
    }
    CHECK(bulk_force(0.25, 2.0) == Catch::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("bulk force derivative values", "[potential]") {
    CHECK(bulk_force_deriv(0.0, 1.0) == Catch::Approx(32.0));
    CHECK(bulk_force_deriv(0.5, 1.0) == Catch::Approx(-16.0));
    // vertex of the quadratic: min over [0,1] is -16 b at x = 1/2
    double lo = 1e100;
    for (int k = 0; k <= 1000; ++k) lo = std::min(lo, bulk_force_deriv(k / 1000.0, 3.0));
    CHECK(lo == Catch::Approx(-48.0).epsilon(1e-6));
}

TEST_CASE("f and f' match finite differences of F", "[potential]") {
    std::mt19937_64 rng(42);
    const double h = 1e-5, b = 2.0;
    for (int k = 0; k < 100; ++k) {
        const double x = -1.0 + 3.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        const double fd = (bulk_energy(x + h, b) - bulk_energy(x - h, b)) / (2.0 * h);
        const double scale = std::max(1.0, std::fabs(fd));
        REQUIRE(std::fabs(bulk_force(x, b) - fd) / scale < 1e-6);
        const double fd2 = (bulk_force(x + h, b) - bulk_force(x - h, b)) / (2.0 * h);
        const double scale2 = std::max(1.0, std::fabs(fd2));
        REQUIRE(std::fabs(bulk_force_deriv(x, b) - fd2) / scale2 < 1e-6);
    }
}

TEST_CASE("F nonnegative and f' bounded below by -16b", "[potential]") {
    const double b = 2.0;
    for (int k = 0; k <= 20000; ++k) {
        const double x = -10.0 + 20.0 * k / 20000.0;
        REQUIRE(bulk_energy(x, b) >= 0.0);
        REQUIRE(bulk_force_deriv(x, b) >= -16.0 * b - 1e-12);
    }
}

TEST_CASE("chemical potential on constant fields", "[potential]") {
    Grid2D g = build_grid(32, 32, 1.2, 1.0);
    PhysicalParams p;
    p.b = 2.0;
    BoundarySpec bc = BoundarySpec::neumann();

    ScalarField c0(g, 0.0);
    CHECK(max_abs(chemical_potential(c0, p, bc)) < 1e-14);

    ScalarField ch(g, 0.5);
    CHECK(max_abs(chemical_potential(ch, p, bc)) < 1e-13);

    ScalarField cq(g, 0.25);
    ScalarField w = chemical_potential(cq, p, bc);
    for (int k = 0; k < g.cells(); ++k) REQUIRE(w.v[k] == Catch::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("total free energy of constant fields", "[potential]") {
    Grid2D g = build_grid(128, 128, 1.2, 1.0);
    PhysicalParams p;
    p.a = 12.0;
    p.b = 2.0;
    ScalarField zero(g, 0.0);
    CHECK(total_free_energy(zero, p) == 0.0);

    ScalarField half(g, 0.5);
    CHECK(total_free_energy(half, p) == Catch::Approx(2.4).epsilon(1e-12));
}
