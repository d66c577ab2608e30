#pragma once

#include "schf/potential.hpp"

namespace schf {

struct CHState {
    double t = 0.0;
    ScalarField c;
    ScalarField w;
};

struct CHStepStats {
    CGStats cg;
    double mass_shift = 0.0;  // uniform correction applied after the solve
    double overshoot = 0.0;   // max distance of c outside [0,1]
};

/// One step of the linearly implicit stabilized scheme
///   (c+ - c)/dt + eps u.grad(c) = eps^2 lap(w+),
///   w+ = -a lap(c+) + f(c) + s (c+ - c),
/// solved as a single SPD system for c+ by matrix-free CG. Values at solid
/// cells are frozen and excluded from all sums.
inline CHState ch_step(const CHState& state, const VectorField& u, const PhysicalParams& p,
                       const PoreMask* mask, double dt, double tol, CHStepStats* stats = nullptr) {
    require(dt > 0.0, "ch_step: dt must be positive");
    if (!state.c.finite() || !state.w.finite() || !u.finite())
        throw std::invalid_argument("ch_step: non-finite input state");

    const Grid2D& g = state.c.grid;
    require(g == u.grid, "ch_step: grid mismatch");
    const BoundarySpec bc = BoundarySpec::neumann(mask);
    const double eps = p.eps_model, s = p.stab;
    const double k1 = dt * eps * eps;

    ScalarField adv = advect_upwind(state.c, u, mask);

    // rhs = c - dt eps adv + dt eps^2 lap(f(c) - s c)
    ScalarField expl(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            expl.at(i, j) = bulk_force(state.c.at(i, j), p.b) - s * state.c.at(i, j);
        }
    ScalarField lap_expl = laplacian(expl, bc);
    std::vector<double> rhs(g.cells(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            rhs[k] = state.c.v[k] - dt * eps * adv.v[k] + k1 * lap_expl.v[k];
        }

    // M c+ = c+ + dt eps^2 (a lap(lap c+) - s lap c+)
    std::vector<double> wx(g.cells()), wy(g.cells()), l1(g.cells()), l2(g.cells());
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        detail::laplacian_kernel(in, g, bc, wx, wy, l1);
        detail::laplacian_kernel(l1, g, bc, wx, wy, l2);
        for (int k = 0; k < g.cells(); ++k) out[k] = in[k] + k1 * (p.a * l2[k] - s * l1[k]);
    };

    CHState next;
    next.t = state.t + dt;
    next.c = state.c;  // warm start; solid cells stay frozen
    CGStats cg = conjugate_gradient(apply, rhs, next.c.v, g, mask, tol, cg_max_iterations(g));
    if (!cg.converged) {
        std::ostringstream os;
        os << "ch_step: CG stalled at relative residual " << cg.rel_residual << " after "
           << cg.iterations << " iterations";
        throw SolverError(os.str(), cg.rel_residual, cg.iterations);
    }

    // Pin the discrete mass balance of the scheme exactly: the CG residual
    // otherwise leaks O(tol) mass per step.
    const int npore = active_count(g, mask);
    const double target = masked_sum(state.c, mask) - dt * eps * masked_sum(adv, mask);
    const double shift = (target - masked_sum(next.c, mask)) / npore;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!mask || mask->pore(i, j)) next.c.at(i, j) += shift;

    ScalarField lap_c = laplacian(next.c, bc);
    next.w = state.w;  // frozen on solid cells
    double overshoot = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            next.w.v[k] = -p.a * lap_c.v[k] + bulk_force(state.c.v[k], p.b) +
                          s * (next.c.v[k] - state.c.v[k]);
            overshoot = std::max({overshoot, -next.c.v[k], next.c.v[k] - 1.0});
        }

    if (stats) {
        stats->cg = cg;
        stats->mass_shift = shift;
        stats->overshoot = std::max(0.0, overshoot);
    }
    return next;
}

enum class WeakForm {
    evolution,  // <dc/dt, phi> + eps^2 int grad w . grad phi - eps int c (u . grad phi)
    potential,  // int w psi - a int grad c . grad psi - <f(c), psi>
};

/// Discrete residual of the weak formulation for a given test field, with
/// cell-sum quadrature over pore cells.
inline double weak_residual(const CHState& cur, const VectorField& u, const CHState& prev,
                            const ScalarField& test, const PhysicalParams& p, const PoreMask* mask,
                            double dt, WeakForm form) {
    const Grid2D& g = cur.c.grid;
    require(g == test.grid && g == prev.c.grid, "weak_residual: grid mismatch");
    const BoundarySpec bc = BoundarySpec::neumann(mask);
    const double vol = g.cell_area();
    VectorField gphi = gradient(test, bc);

    double r = 0.0;
    if (form == WeakForm::evolution) {
        VectorField gw = gradient(cur.w, bc);
        const double e2 = p.eps_model * p.eps_model;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (mask && mask->solid(i, j)) continue;
                const int k = g.idx(i, j);
                r += (cur.c.v[k] - prev.c.v[k]) / dt * test.v[k];
                r += e2 * (gw.x[k] * gphi.x[k] + gw.y[k] * gphi.y[k]);
                r -= p.eps_model * cur.c.v[k] * (u.x[k] * gphi.x[k] + u.y[k] * gphi.y[k]);
            }
    } else {
        VectorField gc = gradient(cur.c, bc);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (mask && mask->solid(i, j)) continue;
                const int k = g.idx(i, j);
                r += cur.w.v[k] * test.v[k];
                r -= p.a * (gc.x[k] * gphi.x[k] + gc.y[k] * gphi.y[k]);
                r -= bulk_force(cur.c.v[k], p.b) * test.v[k];
            }
    }
    return r * vol;
}

}  // namespace schf
