#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "schf/field.hpp"

namespace schf {

/// Constant 2x2 tensor, used for effective diffusion and permeability.
struct Tensor2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static Tensor2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Tensor2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }

    Tensor2 symmetrized() const {
        const double off = 0.5 * (xy + yx);
        return {xx, off, off, yy};
    }
    double asymmetry() const { return std::fabs(xy - yx); }

    /// Eigenvalues of the symmetrized tensor {min, max}.
    std::pair<double, double> sym_eigenvalues() const {
        const double off = 0.5 * (xy + yx);
        const double tr = 0.5 * (xx + yy);
        const double d = std::sqrt(0.25 * (xx - yy) * (xx - yy) + off * off);
        return {tr - d, tr + d};
    }
};

namespace detail {

inline int wrap(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

/// Value of `arr` at neighbor (ii,jj), substituting the ghost rule at domain
/// walls (non-periodic) and at solid cells.
inline double fetch(const std::vector<double>& arr, const Grid2D& g, const BoundarySpec& bc,
                    int ii, int jj, double center) {
    if (bc.periodic) {
        ii = wrap(ii, g.nx);
        jj = wrap(jj, g.ny);
    } else if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) {
        return bc.ghost(center);
    }
    if (bc.mask && bc.mask->solid(ii, jj)) return bc.ghost(center);
    return arr[g.idx(ii, jj)];
}

inline void gradient_kernel(const std::vector<double>& f, const Grid2D& g, const BoundarySpec& bc,
                            std::vector<double>& gx, std::vector<double>& gy) {
    const double rx = 0.5 / g.dx, ry = 0.5 / g.dy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (bc.mask && bc.mask->solid(i, j)) {
                gx[k] = 0.0;
                gy[k] = 0.0;
                continue;
            }
            const double c = f[k];
            gx[k] = (fetch(f, g, bc, i + 1, j, c) - fetch(f, g, bc, i - 1, j, c)) * rx;
            gy[k] = (fetch(f, g, bc, i, j + 1, c) - fetch(f, g, bc, i, j - 1, c)) * ry;
        }
    }
}

inline void divergence_kernel(const std::vector<double>& vx, const std::vector<double>& vy,
                              const Grid2D& g, const BoundarySpec& bc, std::vector<double>& out) {
    const double rx = 0.5 / g.dx, ry = 0.5 / g.dy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (bc.mask && bc.mask->solid(i, j)) {
                out[k] = 0.0;
                continue;
            }
            const double cx = vx[k], cy = vy[k];
            out[k] = (fetch(vx, g, bc, i + 1, j, cx) - fetch(vx, g, bc, i - 1, j, cx)) * rx +
                     (fetch(vy, g, bc, i, j + 1, cy) - fetch(vy, g, bc, i, j - 1, cy)) * ry;
        }
    }
}

/// laplacian = divergence(gradient(.)), with the conjugate ghost rule on the
/// flux so the composition is symmetric and the projection annihilates its own
/// divergence exactly.
inline void laplacian_kernel(const std::vector<double>& f, const Grid2D& g, const BoundarySpec& bc,
                             std::vector<double>& wx, std::vector<double>& wy,
                             std::vector<double>& out) {
    gradient_kernel(f, g, bc, wx, wy);
    divergence_kernel(wx, wy, g, bc.conjugate(), out);
}

inline void laplacian_weighted_kernel(const std::vector<double>& f, const Grid2D& g,
                                      const BoundarySpec& bc, const Tensor2& t,
                                      std::vector<double>& wx, std::vector<double>& wy,
                                      std::vector<double>& out) {
    gradient_kernel(f, g, bc, wx, wy);
    for (std::size_t k = 0; k < wx.size(); ++k) {
        const double a = wx[k], b = wy[k];
        wx[k] = t.xx * a + t.xy * b;
        wy[k] = t.yx * a + t.yy * b;
    }
    divergence_kernel(wx, wy, g, bc.conjugate(), out);
}

}  // namespace detail

inline VectorField gradient(const ScalarField& f, const BoundarySpec& bc) {
    VectorField out(f.grid);
    detail::gradient_kernel(f.v, f.grid, bc, out.x, out.y);
    return out;
}

inline ScalarField divergence(const VectorField& v, const BoundarySpec& bc) {
    ScalarField out(v.grid);
    detail::divergence_kernel(v.x, v.y, v.grid, bc, out.v);
    return out;
}

inline ScalarField laplacian(const ScalarField& f, const BoundarySpec& bc) {
    ScalarField out(f.grid);
    std::vector<double> wx(f.v.size()), wy(f.v.size());
    detail::laplacian_kernel(f.v, f.grid, bc, wx, wy, out.v);
    return out;
}

/// div(T grad f) for a constant tensor T.
inline ScalarField laplacian_weighted(const ScalarField& f, const Tensor2& t, const BoundarySpec& bc) {
    ScalarField out(f.grid);
    std::vector<double> wx(f.v.size()), wy(f.v.size());
    detail::laplacian_weighted_kernel(f.v, f.grid, bc, t, wx, wy, out.v);
    return out;
}

/// First-order upwind u . grad c in face form: the upwind difference at each
/// face is selected by the sign of the face-averaged velocity, and faces on
/// domain walls or touching solid cells carry no flux. Summed over pore cells
/// this reduces to -sum(c * div u), so it conserves mass exactly for
/// discretely divergence-free u.
inline ScalarField advect_upwind(const ScalarField& c, const VectorField& u,
                                 const PoreMask* mask = nullptr) {
    require(c.grid == u.grid, "advect_upwind: grid mismatch");
    const Grid2D& g = c.grid;
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            const double ci = c.v[k];
            double acc = 0.0;

            auto face = [&](int ii, int jj, const std::vector<double>& un, double sign, double rh) {
                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) return;
                if (mask && mask->solid(ii, jj)) return;
                const int kn = g.idx(ii, jj);
                const double uf = 0.5 * (un[k] + un[kn]);
                // outflow faces (upwind value = ci) contribute nothing
                const double up = (sign * uf >= 0.0) ? ci : c.v[kn];
                acc += sign * uf * (up - ci) * rh;
            };
            face(i + 1, j, u.x, +1.0, 1.0 / g.dx);
            face(i - 1, j, u.x, -1.0, 1.0 / g.dx);
            face(i, j + 1, u.y, +1.0, 1.0 / g.dy);
            face(i, j - 1, u.y, -1.0, 1.0 / g.dy);
            out.v[k] = acc;
        }
    }
    return out;
}

// -- matrix-free conjugate gradient ------------------------------------------

struct CGStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

inline int cg_max_iterations(const Grid2D& g) {
    // floor sized so the cold-start biharmonic solve of the reference preset
    // fits (it needs ~2500 iterations at 128^2; warm-started steps need far
    // fewer)
    const int n = static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(g.cells()))));
    return std::max(6000, n);
}

/// CG on an SPD operator given as apply(in, out). Inner products run over
/// active (pore) cells; entries at solid cells are held at zero.
template <class ApplyFn>
CGStats conjugate_gradient(ApplyFn&& apply, const std::vector<double>& rhs, std::vector<double>& x,
                           const Grid2D& g, const PoreMask* mask, double tol, int maxiter) {
    const std::size_t n = rhs.size();
    std::vector<double> r(n), p(n), ap(n);

    const double rhs_norm = std::sqrt(masked_dot(rhs, rhs, g, mask));
    if (rhs_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0, true};
    }

    apply(x, ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - ap[k];
    if (mask) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (mask->solid(i, j)) r[g.idx(i, j)] = 0.0;
    }
    p = r;
    double rr = masked_dot(r, r, g, mask);

    CGStats st;
    st.rel_residual = std::sqrt(rr) / rhs_norm;
    if (st.rel_residual <= tol) {
        st.converged = true;
        return st;
    }
    for (int it = 1; it <= maxiter; ++it) {
        apply(p, ap);
        const double pap = masked_dot(p, ap, g, mask);
        if (pap <= 0.0) break;  // lost positive definiteness (round-off)
        const double alpha = rr / pap;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        const double rr_new = masked_dot(r, r, g, mask);
        st.iterations = it;
        st.rel_residual = std::sqrt(rr_new) / rhs_norm;
        if (st.rel_residual <= tol) {
            st.converged = true;
            return st;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    }
    return st;
}

/// Solves div(T grad phi) = rhs with the ghost rules of `bc` (pure Neumann
/// problem, T constant SPD). Returns the mean-zero solution over active cells.
inline ScalarField solve_poisson_weighted(const ScalarField& rhs, const Tensor2& t,
                                          const BoundarySpec& bc, double tol,
                                          double compat_tol = 1e-6,
                                          const ScalarField* warm_start = nullptr,
                                          CGStats* stats_out = nullptr) {
    require(tol > 0.0, "solve_poisson_weighted: tol must be positive");
    const Grid2D& g = rhs.grid;
    const PoreMask* mask = bc.mask;
    const int nact = active_count(g, mask);

    const double mean = masked_mean(rhs, mask);
    const double rms = std::sqrt(masked_dot(rhs.v, rhs.v, g, mask) / std::max(1, nact));
    if (std::fabs(mean) > compat_tol * std::max(1.0, rms)) {
        std::ostringstream os;
        os << "solve_poisson_weighted: incompatible rhs, mean over active cells = " << mean;
        throw std::invalid_argument(os.str());
    }

    std::vector<double> b(rhs.v.size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!mask || mask->pore(i, j)) b[g.idx(i, j)] = -(rhs.at(i, j) - mean);

    ScalarField phi(g);
    if (warm_start && warm_start->grid == g) phi.v = warm_start->v;
    const double m0 = masked_mean(phi, mask);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            phi.at(i, j) = (!mask || mask->pore(i, j)) ? phi.at(i, j) - m0 : 0.0;

    std::vector<double> wx(b.size()), wy(b.size());
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        detail::laplacian_weighted_kernel(in, g, bc, t, wx, wy, out);
        for (double& v : out) v = -v;
    };

    CGStats st = conjugate_gradient(apply, b, phi.v, g, mask, tol, cg_max_iterations(g));
    if (stats_out) *stats_out = st;
    if (!st.converged) {
        std::ostringstream os;
        os << "solve_poisson_weighted: CG stalled at relative residual " << st.rel_residual
           << " after " << st.iterations << " iterations";
        throw SolverError(os.str(), st.rel_residual, st.iterations);
    }

    const double mz = masked_mean(phi, mask);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            phi.at(i, j) = (!mask || mask->pore(i, j)) ? phi.at(i, j) - mz : 0.0;
    return phi;
}

/// Solves laplacian(phi) = rhs with the ghost rules of `bc` (pure Neumann
/// problem). Returns the mean-zero solution over active cells.
inline ScalarField solve_poisson_neumann(const ScalarField& rhs, const BoundarySpec& bc, double tol,
                                         double compat_tol = 1e-6,
                                         const ScalarField* warm_start = nullptr,
                                         CGStats* stats_out = nullptr) {
    require(tol > 0.0, "solve_poisson_neumann: tol must be positive");
    const Grid2D& g = rhs.grid;
    const PoreMask* mask = bc.mask;
    const int nact = active_count(g, mask);

    const double mean = masked_mean(rhs, mask);
    const double rms = std::sqrt(masked_dot(rhs.v, rhs.v, g, mask) / std::max(1, nact));
    if (std::fabs(mean) > compat_tol * std::max(1.0, rms)) {
        std::ostringstream os;
        os << "solve_poisson_neumann: incompatible rhs, mean over active cells = " << mean;
        throw std::invalid_argument(os.str());
    }

    // CG solves (-lap) phi = -(rhs - mean); the operator is SPD on the
    // mean-zero complement.
    std::vector<double> b(rhs.v.size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!mask || mask->pore(i, j)) b[g.idx(i, j)] = -(rhs.at(i, j) - mean);

    ScalarField phi(g);
    if (warm_start && warm_start->grid == g) phi.v = warm_start->v;
    const double m0 = masked_mean(phi, mask);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            phi.at(i, j) = (!mask || mask->pore(i, j)) ? phi.at(i, j) - m0 : 0.0;

    std::vector<double> wx(b.size()), wy(b.size());
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        detail::laplacian_kernel(in, g, bc, wx, wy, out);
        for (double& v : out) v = -v;
    };

    CGStats st = conjugate_gradient(apply, b, phi.v, g, mask, tol, cg_max_iterations(g));
    if (stats_out) *stats_out = st;
    if (!st.converged) {
        std::ostringstream os;
        os << "solve_poisson_neumann: CG stalled at relative residual " << st.rel_residual
           << " after " << st.iterations << " iterations";
        throw SolverError(os.str(), st.rel_residual, st.iterations);
    }

    const double mz = masked_mean(phi, mask);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            phi.at(i, j) = (!mask || mask->pore(i, j)) ? phi.at(i, j) - mz : 0.0;
    return phi;
}

}  // namespace schf
