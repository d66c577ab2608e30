#pragma once

#include <array>
#include <utility>

#include "schf/potential.hpp"

namespace schf {

struct DiagnosticsRecord {
    double t = 0.0;
    double e_int = 0.0;
    double e_kin = 0.0;
    double mass = 0.0;
    double length = 0.0;
    std::vector<std::array<double, 3>> probes;  // (c, u1, u2) per probe point
};

/// Same functional as total_free_energy; named for the figure it reproduces.
inline double interfacial_energy(const ScalarField& c, const PhysicalParams& p,
                                 const PoreMask* mask = nullptr) {
    return total_free_energy(c, p, mask);
}

/// Equilibrium 1-D profile energy per unit interface length, evaluated by
/// quadrature of sqrt(2 a F(x)) over [0,1]; proportional to sqrt(a b).
inline double profile_sigma(double a, double b) {
    const int n = 4096;  // Simpson panels (even)
    const double h = 1.0 / n;
    auto f = [&](double x) { return std::sqrt(2.0 * a * bulk_energy(x, b)); };
    double s = f(0.0) + f(1.0);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k * h);
    return s * h / 3.0;
}

/// Total length of the `level` iso-contour by marching squares with linear
/// interpolation on cell-center values. Squares touching solid cells are
/// treated as having no crossing.
inline double interface_length(const ScalarField& c, double level = 0.5,
                               const PoreMask* mask = nullptr) {
    const Grid2D& g = c.grid;
    double total = 0.0;

    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            if (mask && (mask->solid(i, j) || mask->solid(i + 1, j) || mask->solid(i + 1, j + 1) ||
                         mask->solid(i, j + 1)))
                continue;
            // corners 0..3: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            const double v0 = c.at(i, j), v1 = c.at(i + 1, j);
            const double v2 = c.at(i + 1, j + 1), v3 = c.at(i, j + 1);
            const int code = (v0 > level ? 1 : 0) | (v1 > level ? 2 : 0) | (v2 > level ? 4 : 0) |
                             (v3 > level ? 8 : 0);
            if (code == 0 || code == 15) continue;

            const double x0 = g.xc(i), y0 = g.yc(j);
            auto lerp = [&](double va, double vb) { return (level - va) / (vb - va); };
            // crossing points on edges: bottom, right, top, left
            const std::array<std::array<double, 2>, 4> pt = {{
                {x0 + lerp(v0, v1) * g.dx, y0},
                {x0 + g.dx, y0 + lerp(v1, v2) * g.dy},
                {x0 + lerp(v3, v2) * g.dx, y0 + g.dy},
                {x0, y0 + lerp(v0, v3) * g.dy},
            }};
            auto seg = [&](int ea, int eb) {
                const double ddx = pt[ea][0] - pt[eb][0];
                const double ddy = pt[ea][1] - pt[eb][1];
                total += std::sqrt(ddx * ddx + ddy * ddy);
            };

            switch (code) {
                case 1: case 14: seg(3, 0); break;
                case 2: case 13: seg(0, 1); break;
                case 3: case 12: seg(3, 1); break;
                case 4: case 11: seg(1, 2); break;
                case 6: case 9:  seg(0, 2); break;
                case 7: case 8:  seg(2, 3); break;
                case 5: {  // saddle, corners 0 and 2 above level
                    const bool center_above = 0.25 * (v0 + v1 + v2 + v3) > level;
                    if (center_above) { seg(0, 1); seg(2, 3); }
                    else              { seg(3, 0); seg(1, 2); }
                    break;
                }
                case 10: {  // saddle, corners 1 and 3 above level
                    const bool center_above = 0.25 * (v0 + v1 + v2 + v3) > level;
                    if (center_above) { seg(3, 0); seg(1, 2); }
                    else              { seg(0, 1); seg(2, 3); }
                    break;
                }
                default: break;
            }
        }
    }
    return total;
}

inline std::pair<double, double> kinetic_energy_and_mass(const VectorField& u, const ScalarField& c,
                                                         const PoreMask* mask = nullptr) {
    require(u.grid == c.grid, "kinetic_energy_and_mass: grid mismatch");
    const Grid2D& g = u.grid;
    double ekin = 0.0, mass = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (mask && mask->solid(i, j)) continue;
            const int k = g.idx(i, j);
            ekin += 0.5 * (u.x[k] * u.x[k] + u.y[k] * u.y[k]);
            mass += c.v[k];
        }
    return {ekin * g.cell_area(), mass * g.cell_area()};
}

struct ProbeValue {
    double value = 0.0;
    bool in_solid = false;
};

namespace detail {

inline double bilinear_probe(const std::vector<double>& v, const Grid2D& g, double x, double y) {
    double gx = x / g.dx - 0.5;
    double gy = y / g.dy - 0.5;
    // near the boundary the stencil clamps to the nearest centers
    int i0 = static_cast<int>(std::floor(gx));
    int j0 = static_cast<int>(std::floor(gy));
    i0 = std::clamp(i0, 0, std::max(0, g.nx - 2));
    j0 = std::clamp(j0, 0, std::max(0, g.ny - 2));
    const double tx = std::clamp(gx - i0, 0.0, 1.0);
    const double ty = std::clamp(gy - j0, 0.0, 1.0);
    const int i1 = std::min(i0 + 1, g.nx - 1);
    const int j1 = std::min(j0 + 1, g.ny - 1);
    const double a = v[g.idx(i0, j0)] * (1 - tx) + v[g.idx(i1, j0)] * tx;
    const double b = v[g.idx(i0, j1)] * (1 - tx) + v[g.idx(i1, j1)] * tx;
    return a * (1 - ty) + b * ty;
}

inline bool probe_in_solid(const Grid2D& g, double x, double y, const PoreMask* mask) {
    if (!mask) return false;
    const int i = std::clamp(static_cast<int>(std::llround(x / g.dx - 0.5)), 0, g.nx - 1);
    const int j = std::clamp(static_cast<int>(std::llround(y / g.dy - 0.5)), 0, g.ny - 1);
    return mask->solid(i, j);
}

inline void check_probe_range(const Grid2D& g, double x, double y) {
    if (x < 0.0 || x > g.lx || y < 0.0 || y > g.ly) {
        std::ostringstream os;
        os << "probe: point (" << x << ", " << y << ") outside [0," << g.lx << "]x[0," << g.ly << "]";
        throw std::out_of_range(os.str());
    }
}

}  // namespace detail

/// Bilinear interpolation from the four surrounding cell centers.
inline ProbeValue probe(const ScalarField& f, double x, double y, const PoreMask* mask = nullptr) {
    detail::check_probe_range(f.grid, x, y);
    return {detail::bilinear_probe(f.v, f.grid, x, y), detail::probe_in_solid(f.grid, x, y, mask)};
}

inline std::array<double, 2> probe_vector(const VectorField& u, double x, double y) {
    detail::check_probe_range(u.grid, x, y);
    return {detail::bilinear_probe(u.x, u.grid, x, y), detail::bilinear_probe(u.y, u.grid, x, y)};
}

}  // namespace schf
