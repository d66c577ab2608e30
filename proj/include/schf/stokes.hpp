#pragma once

#include <limits>

#include "schf/potential.hpp"

namespace schf {

struct StokesState {
    double t = 0.0;
    VectorField u;
    ScalarField p;  // mean-zero over pore cells after a step
};

struct StokesStepStats {
    CGStats poisson;
    double div_norm = 0.0;        // L2 norm of div(u+) over pore cells
    bool diffusion_stable = true; // dt within the explicit viscous bound
    double dt_limit = 0.0;
};

/// Capillary forcing -eps lambda c grad(w), zeroed on solid cells.
inline VectorField capillary_force(const ScalarField& c, const ScalarField& w,
                                   const PhysicalParams& p, const PoreMask* mask = nullptr) {
    require(c.grid == w.grid, "capillary_force: grid mismatch");
    VectorField f = gradient(w, BoundarySpec::neumann(mask));
    const double k = -p.eps_model * p.lambda;
    const Grid2D& g = c.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int kk = g.idx(i, j);
            if (mask && mask->solid(i, j)) {
                f.x[kk] = 0.0;
                f.y[kk] = 0.0;
                continue;
            }
            f.x[kk] *= k * c.v[kk];
            f.y[kk] *= k * c.v[kk];
        }
    return f;
}

namespace detail {

inline void zero_on_solid(VectorField& u, const PoreMask* mask) {
    if (!mask) return;
    const Grid2D& g = u.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (mask->solid(i, j)) {
                u.x[g.idx(i, j)] = 0.0;
                u.y[g.idx(i, j)] = 0.0;
            }
}

}  // namespace detail

/// One step of the unsteady Stokes equation with explicit viscous term and
/// non-incremental pressure projection. With periodic = true the outer
/// boundary wraps (used for the cell problems); otherwise walls are no-slip.
inline StokesState stokes_step(const StokesState& state, const VectorField& force,
                               const PhysicalParams& p, const PoreMask* mask, double dt, double tol,
                               StokesStepStats* stats = nullptr, bool periodic = false,
                               double compat_tol = 1e-6) {
    require(dt > 0.0, "stokes_step: dt must be positive");
    if (!state.u.finite() || !force.finite())
        throw std::invalid_argument("stokes_step: non-finite input");
    const Grid2D& g = state.u.grid;
    require(g == force.grid, "stokes_step: grid mismatch");

    const double nu = p.mu * p.eps_model * p.eps_model;
    BoundarySpec bc_u{BoundarySpec::Kind::dirichlet_zero, periodic, mask};
    BoundarySpec bc_p{BoundarySpec::Kind::neumann_zero, periodic, mask};

    StokesStepStats st;
    const double h2 = std::min(g.dx * g.dx, g.dy * g.dy);
    st.dt_limit = (nu > 0.0) ? h2 / (4.0 * nu) : std::numeric_limits<double>::infinity();
    st.diffusion_stable = dt <= st.dt_limit;

    // predictor: u* = u + dt (nu lap u + force)
    ScalarField ux{g}, uy{g};
    ux.v = state.u.x;
    uy.v = state.u.y;
    ScalarField lx = laplacian(ux, bc_u);
    ScalarField ly = laplacian(uy, bc_u);
    VectorField ustar(g);
    for (int k = 0; k < g.cells(); ++k) {
        ustar.x[k] = state.u.x[k] + dt * (nu * lx.v[k] + force.x[k]);
        ustar.y[k] = state.u.y[k] + dt * (nu * ly.v[k] + force.y[k]);
    }
    detail::zero_on_solid(ustar, mask);

    // projection: lap(phi) = div(u*)/dt, u+ = u* - dt grad(phi), p+ = phi
    ScalarField rhs = divergence(ustar, bc_u);
    for (double& v : rhs.v) v /= dt;
    ScalarField phi = solve_poisson_neumann(rhs, bc_p, tol, compat_tol, &state.p, &st.poisson);

    VectorField gphi = gradient(phi, bc_p);
    StokesState next;
    next.t = state.t + dt;
    next.u = VectorField(g);
    for (int k = 0; k < g.cells(); ++k) {
        next.u.x[k] = ustar.x[k] - dt * gphi.x[k];
        next.u.y[k] = ustar.y[k] - dt * gphi.y[k];
    }
    detail::zero_on_solid(next.u, mask);
    next.p = phi;  // already mean-zero over pore cells

    st.div_norm = l2_norm(divergence(next.u, bc_u), mask);
    if (stats) *stats = st;
    return next;
}

/// Removes the discrete-gradient part of u; idempotent to the solver tolerance.
inline VectorField project_div_free(const VectorField& u, const PoreMask* mask, double tol,
                                    bool periodic = false) {
    if (!u.finite()) throw std::invalid_argument("project_div_free: non-finite input");
    const Grid2D& g = u.grid;
    BoundarySpec bc_u{BoundarySpec::Kind::dirichlet_zero, periodic, mask};
    BoundarySpec bc_p{BoundarySpec::Kind::neumann_zero, periodic, mask};

    ScalarField rhs = divergence(u, bc_u);
    ScalarField phi = solve_poisson_neumann(rhs, bc_p, tol, 1e-6);
    VectorField gphi = gradient(phi, bc_p);
    VectorField out(g);
    for (int k = 0; k < g.cells(); ++k) {
        out.x[k] = u.x[k] - gphi.x[k];
        out.y[k] = u.y[k] - gphi.y[k];
    }
    detail::zero_on_solid(out, mask);
    return out;
}

}  // namespace schf
