#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "schf/grid.hpp"

namespace schf {

/// Scalar values at cell centers, row-major with x2 varying slowest.
struct ScalarField {
    Grid2D grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid(g), v(g.cells(), fill) {}

    double& at(int i, int j) { return v[grid.idx(i, j)]; }
    double at(int i, int j) const { return v[grid.idx(i, j)]; }

    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

/// Two collocated components per cell center.
struct VectorField {
    Grid2D grid;
    std::vector<double> x, y;

    VectorField() = default;
    explicit VectorField(const Grid2D& g, double fx = 0.0, double fy = 0.0)
        : grid(g), x(g.cells(), fx), y(g.cells(), fy) {}

    bool finite() const {
        for (double c : x)
            if (!std::isfinite(c)) return false;
        for (double c : y)
            if (!std::isfinite(c)) return false;
        return true;
    }
};

inline ScalarField field_from(const Grid2D& g, const std::function<double(double, double)>& f) {
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out.at(i, j) = f(g.xc(i), g.yc(j));
    return out;
}

/// Ghost-value rule applied at domain walls and at pore/solid interfaces.
/// With periodic = true the outer boundary wraps and the rule only acts at
/// solid neighbors.
struct BoundarySpec {
    enum class Kind { neumann_zero, dirichlet_zero };

    Kind kind = Kind::neumann_zero;
    bool periodic = false;
    const PoreMask* mask = nullptr;

    static BoundarySpec neumann(const PoreMask* m = nullptr) { return {Kind::neumann_zero, false, m}; }
    static BoundarySpec dirichlet(const PoreMask* m = nullptr) { return {Kind::dirichlet_zero, false, m}; }
    static BoundarySpec periodic_neumann(const PoreMask* m = nullptr) { return {Kind::neumann_zero, true, m}; }
    static BoundarySpec periodic_dirichlet(const PoreMask* m = nullptr) { return {Kind::dirichlet_zero, true, m}; }

    /// Ghost rule for the flux field conjugate to this spec: reflection ghosts
    /// pair with negation ghosts so that divergence is minus the transpose of
    /// gradient cell by cell.
    BoundarySpec conjugate() const {
        BoundarySpec b = *this;
        b.kind = (kind == Kind::neumann_zero) ? Kind::dirichlet_zero : Kind::neumann_zero;
        return b;
    }

    bool active(int i, int j) const { return mask == nullptr || mask->pore(i, j); }
    double ghost(double center) const { return kind == Kind::neumann_zero ? center : -center; }
};

// -- reductions over active (pore) cells ------------------------------------

inline double masked_sum(const ScalarField& f, const PoreMask* mask) {
    double s = 0.0;
    const auto& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!mask || mask->pore(i, j)) s += f.at(i, j);
    return s;
}

inline int active_count(const Grid2D& g, const PoreMask* mask) {
    return mask ? mask->pore_count() : g.cells();
}

inline double masked_mean(const ScalarField& f, const PoreMask* mask) {
    const int n = active_count(f.grid, mask);
    return n > 0 ? masked_sum(f, mask) / n : 0.0;
}

inline double masked_dot(const std::vector<double>& a, const std::vector<double>& b,
                         const Grid2D& g, const PoreMask* mask) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            s += a[k] * b[k];
        }
    return s;
}

/// Discrete L2 norm sqrt(sum f^2 dx dy) over active cells.
inline double l2_norm(const ScalarField& f, const PoreMask* mask = nullptr) {
    return std::sqrt(masked_dot(f.v, f.v, f.grid, mask) * f.grid.cell_area());
}

inline double l2_norm(const VectorField& u, const PoreMask* mask = nullptr) {
    const double s = masked_dot(u.x, u.x, u.grid, mask) + masked_dot(u.y, u.y, u.grid, mask);
    return std::sqrt(s * u.grid.cell_area());
}

inline double max_abs(const ScalarField& f, const PoreMask* mask = nullptr) {
    double m = 0.0;
    const auto& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!mask || mask->pore(i, j)) m = std::max(m, std::fabs(f.at(i, j)));
    return m;
}

}  // namespace schf
