#pragma once

#include <optional>
#include <string>

#include "schf/stokes.hpp"

namespace schf {

/// Solution of a problem posed on the periodic reference cell Y = (0,1)^2.
/// Scalar solutions (correctors, xi, cell pressure) are mean-zero over Y_p.
struct CellSolution {
    Grid2D grid;
    CellGeometry geometry;
    ScalarField scalar;    // corrector chi_j or xi
    VectorField velocity;  // permeability solves
    ScalarField pressure;
    double residual = 0.0;

    // xi diagnostics
    double hessian_defect = 0.0;
    double boundary_flux = 0.0;   // prescribed flux on Gamma
    double gamma_length = 0.0;    // staircase perimeter of Gamma
};

struct EffectiveTensors {
    double theta = 1.0;
    Tensor2 A_eff = Tensor2::identity();
    double A_asymmetry = 0.0;
    std::optional<Tensor2> K;
    double K_asymmetry = 0.0;
    std::string K_absent_reason;
    std::optional<CellSolution> xi;
    int cell_n = 0;
    CellGeometry geometry;
};

struct HomogenizeOptions {
    double cg_tol = 1e-10;     // cell Poisson solves
    double steady_tol = 1e-5;  // ||u(n+1)-u(n)||/dt threshold for cell Stokes
    double proj_tol = 1e-9;    // projection inside the pseudo-time march
    bool corrector = true;     // false reproduces A_eff = theta * I
    double xi_source = 2.0;    // right-hand side d of the xi trace problem
    int max_pseudo_steps = 2000000;
};

namespace detail {

inline PoreMask cell_mask(const Grid2D& g, const CellGeometry& geom) {
    return build_pore_mask(g, geom, 1.0);
}

inline VectorField unit_pore_field(const Grid2D& g, const PoreMask& mask, int axis) {
    VectorField e(g);
    auto& comp = (axis == 0) ? e.x : e.y;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (mask.pore(i, j)) comp[g.idx(i, j)] = 1.0;
    return e;
}

}  // namespace detail

/// Diffusion cell problem for axis j: lap(chi_j) = 0 in Y_p with zero normal
/// flux of chi_j + y_j on Gamma and Y-periodicity; variationally this is
/// lap(chi_j) = -div(e_j restricted to the pore space).
inline CellSolution solve_corrector(const Grid2D& cell_grid, const CellGeometry& geom, int axis,
                                    double tol) {
    require(axis == 0 || axis == 1, "solve_corrector: axis must be 0 or 1");
    PoreMask mask = detail::cell_mask(cell_grid, geom);
    require(mask.pore_count() > 0, "solve_corrector: pore space is empty");

    VectorField e = detail::unit_pore_field(cell_grid, mask, axis);
    ScalarField rhs = divergence(e, BoundarySpec::periodic_dirichlet(&mask));
    for (double& v : rhs.v) v = -v;

    CGStats st;
    CellSolution sol;
    sol.grid = cell_grid;
    sol.geometry = geom;
    sol.scalar =
        solve_poisson_neumann(rhs, BoundarySpec::periodic_neumann(&mask), tol, 1e-6, nullptr, &st);
    sol.residual = st.rel_residual;
    return sol;
}

/// A_eff[i][j] = (1/|Y|) sum over Y_p of (delta_ij + d(chi_j)/dy_i) dy,
/// symmetrized; the raw asymmetry is reported through `asymmetry_out`.
inline Tensor2 effective_diffusion(const CellSolution& chi1, const CellSolution& chi2,
                                   const CellGeometry& geom, double* asymmetry_out = nullptr) {
    require(chi1.grid == chi2.grid, "effective_diffusion: cell grids differ");
    const Grid2D& g = chi1.grid;
    PoreMask mask = detail::cell_mask(g, geom);
    const BoundarySpec bc = BoundarySpec::periodic_neumann(&mask);
    VectorField g1 = gradient(chi1.scalar, bc);
    VectorField g2 = gradient(chi2.scalar, bc);

    const double vol = g.cell_area() / (g.lx * g.ly);
    Tensor2 a{};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask.solid(i, j)) continue;
            const int k = g.idx(i, j);
            a.xx += (1.0 + g1.x[k]) * vol;
            a.yx += g1.y[k] * vol;
            a.xy += g2.x[k] * vol;
            a.yy += (1.0 + g2.y[k]) * vol;
        }
    if (asymmetry_out) *asymmetry_out = a.asymmetry();
    return a.symmetrized();
}

/// Flux-repaired trace problem for xi: lap(xi) = d in Y_p with the constant
/// compensating flux d |Y_p| / |Gamma| through the staircase interface, mean
/// zero, Y-periodic. The literal Hessian condition has no periodic solution;
/// the achieved Hessian defect is reported on the solution.
inline CellSolution solve_xi(const Grid2D& cell_grid, const CellGeometry& geom, double tol,
                             double source = 2.0) {
    PoreMask mask = detail::cell_mask(cell_grid, geom);
    const Grid2D& g = cell_grid;
    if (geom.shape == CellGeometry::Shape::empty)
        throw std::invalid_argument("solve_xi: no internal boundary to balance the source");
    require(mask.pore_count() > 0, "solve_xi: pore space is empty");

    // per-cell length of pore/solid faces (periodic neighbor indexing)
    std::vector<double> face_len(g.cells(), 0.0);
    double gamma_len = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask.solid(i, j)) continue;
            double len = 0.0;
            if (mask.solid(detail::wrap(i + 1, g.nx), j)) len += g.dy;
            if (mask.solid(detail::wrap(i - 1, g.nx), j)) len += g.dy;
            if (mask.solid(i, detail::wrap(j + 1, g.ny))) len += g.dx;
            if (mask.solid(i, detail::wrap(j - 1, g.ny))) len += g.dx;
            face_len[g.idx(i, j)] = len;
            gamma_len += len;
        }
    require(gamma_len > 0.0, "solve_xi: no internal boundary to balance the source");

    const double pore_area = mask.pore_count() * g.cell_area();
    const double flux = source * pore_area / gamma_len;

    ScalarField rhs(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask.solid(i, j)) continue;
            rhs.at(i, j) = source - flux * face_len[g.idx(i, j)] / g.cell_area();
        }

    CGStats st;
    CellSolution sol;
    sol.grid = g;
    sol.geometry = geom;
    sol.scalar =
        solve_poisson_neumann(rhs, BoundarySpec::periodic_neumann(&mask), tol, 1e-6, nullptr, &st);
    sol.residual = st.rel_residual;
    sol.boundary_flux = flux;
    sol.gamma_length = gamma_len;

    const BoundarySpec bc = BoundarySpec::periodic_neumann(&mask);
    VectorField gr = gradient(sol.scalar, bc);
    ScalarField gx{g}, gy{g};
    gx.v = gr.x;
    gy.v = gr.y;
    VectorField hx = gradient(gx, bc);
    VectorField hy = gradient(gy, bc);
    double defect = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask.solid(i, j)) continue;
            const int k = g.idx(i, j);
            const double dxx = hx.x[k] - 1.0, dxy = hx.y[k];
            const double dyx = hy.x[k], dyy = hy.y[k] - 1.0;
            defect += (dxx * dxx + dxy * dxy + dyx * dyx + dyy * dyy) * g.cell_area();
        }
    sol.hessian_defect = std::sqrt(defect);
    return sol;
}

/// Unit-forcing steady Stokes on the cell (mu = 1), driven to steady state by
/// pseudo-time iteration of stokes_step. The plain march u <- step(u) is
/// affine with a symmetric positive semidefinite defect I - G on the
/// discretely divergence-free subspace, so the march is Krylov-accelerated:
/// CG is run on (I - G) u = step(0) where every operator application is one
/// stokes_step call. The CG residual equals step(u) - u, so the stopping
/// criterion is the per-step increment ||u(n+1) - u(n)|| / dt <= tol, the same
/// as for the plain march.
inline CellSolution solve_permeability(const Grid2D& cell_grid, const CellGeometry& geom, int axis,
                                       const HomogenizeOptions& opt = {}) {
    require(axis == 0 || axis == 1, "solve_permeability: axis must be 0 or 1");
    if (geom.shape == CellGeometry::Shape::empty)
        throw std::invalid_argument("solve_permeability: steady cell flow unbounded without no-slip obstacle");
    PoreMask mask = detail::cell_mask(cell_grid, geom);
    require(mask.pore_count() > 0, "solve_permeability: pore space is empty");

    PhysicalParams p;
    p.mu = 1.0;
    p.eps_model = 1.0;
    VectorField force = detail::unit_pore_field(cell_grid, mask, axis);

    const Grid2D& g = cell_grid;
    const int n = g.cells();
    const double dt = 0.9 * std::min(g.dx * g.dx, g.dy * g.dy) / 4.0;
    const double inner_tol = 1e-11;

    ScalarField p_warm(g);  // carries the projection potential between applies
    auto march = [&](const VectorField& u, const VectorField& f) {
        StokesState s;
        s.u = u;
        s.p = p_warm;
        StokesState next = stokes_step(s, f, p, &mask, dt, inner_tol, nullptr, true);
        p_warm = next.p;
        return next.u;
    };

    const VectorField zero(g);
    VectorField b = march(zero, force);  // = P(dt f)

    // stacked (u_x, u_y) vectors for CG; dots over pore cells of both parts
    auto pack = [&](const VectorField& u, std::vector<double>& out) {
        std::copy(u.x.begin(), u.x.end(), out.begin());
        std::copy(u.y.begin(), u.y.end(), out.begin() + n);
    };
    auto unpack = [&](const std::vector<double>& in, VectorField& u) {
        std::copy(in.begin(), in.begin() + n, u.x.begin());
        std::copy(in.begin() + n, in.end(), u.y.begin());
    };

    VectorField work(g);
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        unpack(in, work);
        VectorField gu = march(work, zero);
        for (int k = 0; k < n; ++k) {
            out[k] = in[k] - gu.x[k];
            out[n + k] = in[n + k] - gu.y[k];
        }
    };

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (mask.solid(i, j)) continue;
                const int k = g.idx(i, j);
                s += a[k] * c[k] + a[n + k] * c[n + k];
            }
        return s;
    };

    std::vector<double> x(2 * n, 0.0), rhs(2 * n), r(2 * n), d(2 * n), ad(2 * n);
    pack(b, rhs);
    r = rhs;
    d = r;
    double rr = dot(r, r);
    // stop when the increment ||step(u) - u||_L2 / dt falls below steady_tol
    const double area = g.cell_area();
    const double target = opt.steady_tol * dt / std::sqrt(area);
    const int max_outer = std::max(500, cg_max_iterations(g) / 4);
    double inc = std::sqrt(rr * area) / dt;
    int it = 0;
    while (std::sqrt(rr) > target && it < max_outer) {
        apply(d, ad);
        const double dad = dot(d, ad);
        if (dad <= 0.0) break;
        const double alpha = rr / dad;
        for (int k = 0; k < 2 * n; ++k) {
            x[k] += alpha * d[k];
            r[k] -= alpha * ad[k];
        }
        const double rr_new = dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int k = 0; k < 2 * n; ++k) d[k] = r[k] + beta * d[k];
        ++it;
        inc = std::sqrt(rr * area) / dt;
    }
    if (inc > opt.steady_tol) {
        std::ostringstream os;
        os << "solve_permeability: steady march stalled, increment " << inc << " after " << it
           << " accelerated steps";
        throw SolverError(os.str(), inc, it);
    }

    CellSolution sol;
    sol.grid = g;
    sol.geometry = geom;
    sol.velocity = VectorField(g);
    unpack(x, sol.velocity);
    // one plain march re-projects the accelerated iterate and refreshes p
    sol.velocity = march(sol.velocity, force);
    sol.pressure = p_warm;
    sol.residual = inc;
    return sol;
}

/// Porosity, correctors, permeability and xi packaged for the macro solver.
inline EffectiveTensors assemble_effective(int cell_n, const CellGeometry& geom,
                                           const HomogenizeOptions& opt = {}) {
    require(cell_n >= 32, "assemble_effective: cell_n must be >= 32");
    const Grid2D g = build_grid(cell_n, cell_n, 1.0, 1.0);
    PoreMask mask = detail::cell_mask(g, geom);

    EffectiveTensors eff;
    eff.cell_n = cell_n;
    eff.geometry = geom;
    eff.theta = porosity(mask);

    if (opt.corrector) {
        CellSolution chi1 = solve_corrector(g, geom, 0, opt.cg_tol);
        CellSolution chi2 = solve_corrector(g, geom, 1, opt.cg_tol);
        eff.A_eff = effective_diffusion(chi1, chi2, geom, &eff.A_asymmetry);
    } else {
        eff.A_eff = Tensor2::diag(eff.theta, eff.theta);
        eff.A_asymmetry = 0.0;
    }

    if (geom.shape == CellGeometry::Shape::empty) {
        eff.K_absent_reason = "steady cell flow unbounded without no-slip obstacle";
    } else {
        CellSolution k1 = solve_permeability(g, geom, 0, opt);
        CellSolution k2 = solve_permeability(g, geom, 1, opt);
        const double vol = g.cell_area() / (g.lx * g.ly);
        Tensor2 k{};
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (mask.solid(i, j)) continue;
                const int kk = g.idx(i, j);
                k.xx += k1.velocity.x[kk] * vol;
                k.yx += k1.velocity.y[kk] * vol;
                k.xy += k2.velocity.x[kk] * vol;
                k.yy += k2.velocity.y[kk] * vol;
            }
        eff.K_asymmetry = k.asymmetry();
        eff.K = k.symmetrized();
        eff.xi = solve_xi(g, geom, opt.cg_tol, opt.xi_source);
    }
    return eff;
}

}  // namespace schf
