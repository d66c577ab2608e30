#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "schf/common.hpp"

namespace schf {

/// Uniform cell-centered grid over [0,lx] x [0,ly].
/// Cell (i,j) has its center at ((i+0.5)*dx, (j+0.5)*dy).
struct Grid2D {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    double dx = 0.0, dy = 0.0;

    int cells() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
    double xc(int i) const { return (i + 0.5) * dx; }
    double yc(int j) const { return (j + 0.5) * dy; }
    double cell_area() const { return dx * dy; }

    bool operator==(const Grid2D& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
    }
};

inline Grid2D build_grid(int nx, int ny, double lx, double ly) {
    require(nx >= 1 && ny >= 1, "build_grid: cell counts must be >= 1");
    require(lx > 0.0 && ly > 0.0, "build_grid: extents must be positive");
    Grid2D g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    g.dx = lx / nx;
    g.dy = ly / ny;
    return g;
}

/// Solid inclusion inside the unit reference cell Y = (0,1)^2.
struct CellGeometry {
    enum class Shape { empty, disk, slab };
    enum class Axis { x, y };

    Shape shape = Shape::empty;
    double radius = 0.0;      // disk radius, fraction of Y
    double height = 0.0;      // slab thickness, fraction of Y
    Axis slab_normal = Axis::y;

    static CellGeometry empty() { return CellGeometry{}; }

    static CellGeometry disk(double radius) {
        require(radius >= 0.0 && radius < 0.5, "disk radius must lie in [0, 0.5)");
        CellGeometry g;
        g.shape = Shape::disk;
        g.radius = radius;
        return g;
    }

    static CellGeometry slab(double height, Axis normal = Axis::y) {
        require(height >= 0.0 && height < 1.0, "slab height must lie in [0, 1)");
        CellGeometry g;
        g.shape = Shape::slab;
        g.height = height;
        g.slab_normal = normal;
        return g;
    }

    /// True if point (y1,y2) in Y lies in the solid part Y_s.
    bool in_solid(double y1, double y2) const {
        switch (shape) {
            case Shape::empty:
                return false;
            case Shape::disk: {
                const double r1 = y1 - 0.5, r2 = y2 - 0.5;
                return r1 * r1 + r2 * r2 < radius * radius;
            }
            case Shape::slab: {
                const double t = (slab_normal == Axis::y) ? y2 : y1;
                return t >= 0.5 - height / 2.0 && t < 0.5 + height / 2.0;
            }
        }
        return false;
    }
};

/// Periodic pore/solid indicator over a grid: a cell is solid iff its center,
/// mapped by y = (x/eps mod 1), lies in Y_s.
struct PoreMask {
    Grid2D grid;
    double epsilon_geom = 1.0;
    CellGeometry geometry;
    std::vector<std::uint8_t> flags;  // 1 = pore, 0 = solid

    bool pore(int i, int j) const { return flags[grid.idx(i, j)] != 0; }
    bool solid(int i, int j) const { return flags[grid.idx(i, j)] == 0; }

    int pore_count() const {
        int n = 0;
        for (auto f : flags) n += (f != 0);
        return n;
    }
};

inline PoreMask build_pore_mask(const Grid2D& grid, const CellGeometry& geom, double epsilon) {
    require(epsilon > 0.0, "build_pore_mask: epsilon must be positive");
    const double min_eps = 2.0 * std::max(grid.dx, grid.dy);
    if (epsilon < min_eps) {
        std::ostringstream os;
        os << "build_pore_mask: epsilon " << epsilon << " below minimum resolvable " << min_eps
           << " (2*max(dx,dy)) on this grid";
        throw std::invalid_argument(os.str());
    }
    PoreMask m;
    m.grid = grid;
    m.epsilon_geom = epsilon;
    m.geometry = geom;
    m.flags.assign(grid.cells(), 1);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            double y1 = grid.xc(i) / epsilon;
            double y2 = grid.yc(j) / epsilon;
            y1 -= std::floor(y1);
            y2 -= std::floor(y2);
            if (geom.in_solid(y1, y2)) m.flags[grid.idx(i, j)] = 0;
        }
    }
    return m;
}

/// Pore-cell fraction |Omega_p| / |Omega|.
inline double porosity(const PoreMask& mask) {
    return static_cast<double>(mask.pore_count()) / static_cast<double>(mask.grid.cells());
}

}  // namespace schf
