#pragma once

#include "schf/field_ops.hpp"

namespace schf {

/// Model constants. `stab` is the stabilization constant of the semi-implicit
/// scheme; the default 64*b is twice the maximum of f' on [0,1].
struct PhysicalParams {
    double a = 12.0;        // gradient-energy coefficient
    double b = 2.0;         // bulk-energy coefficient
    double lambda = 4e-2;   // capillary coupling
    double mu = 1e-2;       // viscosity
    double eps_model = 5e-2;
    double rho = 1.0;       // fixed at 1
    double stab = 128.0;

    static double default_stab(double b) { return 64.0 * b; }
};

/// Double-well bulk energy F(x) = 16 b x^2 (x-1)^2. F(0.5) = b.
inline double bulk_energy(double x, double b) {
    const double y = x * (x - 1.0);
    return 16.0 * b * y * y;
}

/// f = F' = 32 b (2x^3 - 3x^2 + x); roots at 0, 1/2, 1.
inline double bulk_force(double x, double b) {
    return 32.0 * b * (2.0 * x * x * x - 3.0 * x * x + x);
}

/// f' = 32 b (6x^2 - 6x + 1); minimum -16 b at x = 1/2, so f' >= -16 b.
inline double bulk_force_deriv(double x, double b) {
    return 32.0 * b * (6.0 * x * x - 6.0 * x + 1.0);
}

/// w = f(c) - a lap(c).
inline ScalarField chemical_potential(const ScalarField& c, const PhysicalParams& p,
                                      const BoundarySpec& bc) {
    ScalarField w = laplacian(c, bc);
    const Grid2D& g = c.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (bc.mask && bc.mask->solid(i, j)) continue;
            w.at(i, j) = bulk_force(c.at(i, j), p.b) - p.a * w.at(i, j);
        }
    return w;
}

/// E(c) = sum over pore cells of (a/2 |grad c|^2 + F(c)) dx dy.
inline double total_free_energy(const ScalarField& c, const PhysicalParams& p,
                                const PoreMask* mask = nullptr) {
    BoundarySpec bc = BoundarySpec::neumann(mask);
    VectorField gr = gradient(c, bc);
    const Grid2D& g = c.grid;
    double e = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            e += 0.5 * p.a * (gr.x[k] * gr.x[k] + gr.y[k] * gr.y[k]) +
                 bulk_energy(c.v[k], p.b);
        }
    return e * g.cell_area();
}

}  // namespace schf
