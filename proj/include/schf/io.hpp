#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "schf/diagnostics.hpp"

namespace schf {

/// Scientific notation with a 12-digit mantissa and minimal exponent:
/// 0 -> "0.000000000000e0", 0.0078125 -> "7.812500000000e-3".
inline std::string format_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    std::string s(buf);
    const auto e = s.find('e');
    std::string mant = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    bool neg = false;
    if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
        neg = exp[0] == '-';
        exp.erase(0, 1);
    }
    std::size_t nz = 0;
    while (nz + 1 < exp.size() && exp[nz] == '0') ++nz;
    exp.erase(0, nz);
    return mant + "e" + (neg ? "-" : "") + exp;
}

inline std::string timeseries_header(std::size_t n_probes) {
    std::string h = "t,E_int,E_kin,mass,length";
    for (std::size_t k = 1; k <= n_probes; ++k) {
        const std::string p = "p" + std::to_string(k);
        h += "," + p + "_c," + p + "_u1," + p + "_u2";
    }
    return h;
}

inline std::string timeseries_csv(const std::vector<DiagnosticsRecord>& records) {
    require(!records.empty(), "timeseries_csv: empty record series");
    std::string out = timeseries_header(records.front().probes.size()) + "\n";
    for (const auto& r : records) {
        out += format_sci(r.t) + "," + format_sci(r.e_int) + "," + format_sci(r.e_kin) + "," +
               format_sci(r.mass) + "," + format_sci(r.length);
        for (const auto& p : r.probes)
            out += "," + format_sci(p[0]) + "," + format_sci(p[1]) + "," + format_sci(p[2]);
        out += "\n";
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_timeseries_csv(const std::vector<DiagnosticsRecord>& records,
                                 const std::string& path) {
    write_text(path, timeseries_csv(records));
}

inline std::vector<DiagnosticsRecord> read_timeseries_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty timeseries file '" + path + "'");
    std::vector<DiagnosticsRecord> out;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream is(line);
        std::string tok;
        while (std::getline(is, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
        if (vals.size() < 5 || (vals.size() - 5) % 3 != 0)
            throw std::runtime_error("malformed timeseries row in '" + path + "'");
        DiagnosticsRecord r;
        r.t = vals[0];
        r.e_int = vals[1];
        r.e_kin = vals[2];
        r.mass = vals[3];
        r.length = vals[4];
        for (std::size_t k = 5; k + 2 < vals.size() + 1 && k + 2 <= vals.size(); k += 3)
            r.probes.push_back({vals[k], vals[k + 1], vals[k + 2]});
        out.push_back(std::move(r));
    }
    return out;
}

enum class SnapshotFormat { pgm, raw };

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    s.append(b, 4);
}

inline std::uint32_t get_u32(const char* p) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

inline void put_f64(std::string& s, double v) {
    static_assert(sizeof(double) == 8);
    char b[8];
    std::memcpy(b, &v, 8);
    s.append(b, 8);  // little-endian host assumed
}

inline double get_f64(const char* p) {
    double v;
    std::memcpy(&v, p, 8);
    return v;
}

}  // namespace detail

/// PGM (binary P5): value = clamp(c,0,1)*255 rounded half-up, rows written
/// top-to-bottom as decreasing x2.
/// RAW: "SCHF", u32 nx, u32 ny (little-endian), then nx*ny f64 row-major.
inline void write_field_snapshot(const ScalarField& f, const std::string& path,
                                 SnapshotFormat fmt) {
    require(f.finite(), "write_field_snapshot: non-finite field");
    const Grid2D& g = f.grid;
    std::string out;
    if (fmt == SnapshotFormat::pgm) {
        out = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
        for (int j = g.ny - 1; j >= 0; --j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = std::clamp(f.at(i, j), 0.0, 1.0);
                out.push_back(static_cast<char>(static_cast<int>(std::floor(c * 255.0 + 0.5))));
            }
    } else {
        out = "SCHF";
        detail::put_u32(out, static_cast<std::uint32_t>(g.nx));
        detail::put_u32(out, static_cast<std::uint32_t>(g.ny));
        for (double v : f.v) detail::put_f64(out, v);
    }
    write_text(path, out);
}

inline ScalarField read_field_raw(const std::string& path, double lx = 1.2, double ly = 1.0) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 12 || data.compare(0, 4, "SCHF") != 0)
        throw std::runtime_error("'" + path + "' is not a SCHF raw snapshot");
    const std::uint32_t nx = detail::get_u32(data.data() + 4);
    const std::uint32_t ny = detail::get_u32(data.data() + 8);
    if (data.size() != 12 + 8ull * nx * ny)
        throw std::runtime_error("'" + path + "' has truncated payload");
    ScalarField out(build_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly));
    for (std::size_t k = 0; k < static_cast<std::size_t>(nx) * ny; ++k)
        out.v[k] = detail::get_f64(data.data() + 12 + 8 * k);
    return out;
}

// -- checkpoints (exact solver state for the time-shift restart) -------------

struct Checkpoint {
    double t = 0.0;
    Grid2D grid;
    std::vector<std::vector<double>> fields;
};

inline void write_checkpoint(const std::string& path, double t, const Grid2D& g,
                             const std::vector<const std::vector<double>*>& fields) {
    std::string out = "SCHK";
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(g.nx));
    detail::put_u32(out, static_cast<std::uint32_t>(g.ny));
    detail::put_f64(out, g.lx);
    detail::put_f64(out, g.ly);
    detail::put_f64(out, t);
    detail::put_u32(out, static_cast<std::uint32_t>(fields.size()));
    for (const auto* f : fields)
        for (double v : *f) detail::put_f64(out, v);
    write_text(path, out);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 44 || data.compare(0, 4, "SCHK") != 0)
        throw std::runtime_error("'" + path + "' is not a checkpoint");
    const char* p = data.data() + 4;
    const std::uint32_t ver = detail::get_u32(p); p += 4;
    if (ver != 1) throw std::runtime_error("unsupported checkpoint version");
    Checkpoint ck;
    const std::uint32_t nx = detail::get_u32(p); p += 4;
    const std::uint32_t ny = detail::get_u32(p); p += 4;
    const double lx = detail::get_f64(p); p += 8;
    const double ly = detail::get_f64(p); p += 8;
    ck.grid = build_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);
    ck.t = detail::get_f64(p); p += 8;
    const std::uint32_t nf = detail::get_u32(p); p += 4;
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    if (data.size() != 44 + 8ull * nf * cells)
        throw std::runtime_error("'" + path + "' has truncated payload");
    ck.fields.assign(nf, std::vector<double>(cells));
    for (std::uint32_t fi = 0; fi < nf; ++fi)
        for (std::size_t k = 0; k < cells; ++k, p += 8) ck.fields[fi][k] = detail::get_f64(p);
    return ck;
}

}  // namespace schf
