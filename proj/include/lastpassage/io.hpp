#pragma once

#include "lastpassage/boundary.hpp"
#include "lastpassage/config.hpp"
#include "lastpassage/error.hpp"
#include "lastpassage/simulator.hpp"
#include "lastpassage/valuation.hpp"

#include <boost/version.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#ifndef LASTPASSAGE_VERSION
#define LASTPASSAGE_VERSION "dev"
#endif

namespace lastpassage {

/// Decimal with 12 significant digits.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

using Provenance = std::vector<std::pair<std::string, std::string>>;

inline std::string compiler_id() {
#if defined(__clang__)
    return "clang-" __clang_version__;
#elif defined(__GNUC__)
    return "gcc-" __VERSION__;
#else
    return "unknown";
#endif
}

/// Header lines shared by every output file.
inline Provenance run_provenance(const RunConfig& cfg, const std::string& command) {
    return {{"lastpassage", LASTPASSAGE_VERSION},
            {"boost", std::to_string(BOOST_VERSION)},
            {"compiler", compiler_id()},
            {"command", command},
            {"config_hash", hex64(cfg.hash)},
            {"kernel_seed", std::to_string(cfg.kernels.seed)},
            {"sim_seed", std::to_string(cfg.sim.seed)}};
}

inline void write_provenance(std::ostream& os, const Provenance& p) {
    for (const auto& [k, v] : p) os << "# " << k << "=" << v << "\n";
}

/// Writes through a temporary file so a failed run never leaves a partial file.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string boundary_csv(const BoundaryGrid& g, const Provenance& header) {
    std::ostringstream os;
    write_provenance(os, header);
    write_provenance(os, g.provenance);
    if (g.has_jump_functional()) {
        os << "k,t_k,b_k,v_k,residual,certified\n";
        for (std::size_t k = 0; k < g.n; ++k)
            os << k << "," << num(g.t[k]) << "," << num(g.b[k]) << "," << num(g.v[k]) << "," << num(g.residual[k])
               << "," << (g.certified[k] ? 1 : 0) << "\n";
    } else {
        os << "k,t_k,b_k\n";
        for (std::size_t k = 0; k < g.n; ++k) os << k << "," << num(g.t[k]) << "," << num(g.b[k]) << "\n";
    }
    return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    return out;
}

inline double parse_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads a boundary file written by boundary_csv and checks that it was produced for
/// the model, theta and n of `ctx` / `n`.
inline BoundaryGrid read_boundary(std::istream& in, const GainContext& ctx, std::size_t n) {
    BoundaryGrid g = detail::make_grid(ctx, n);
    std::string line;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::size_t rows = 0;
    bool jump = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        if (header.empty()) {
            header = detail::split_csv(line);
            jump = header.size() == 6;
            if (!(header.size() == 3 || jump) || header[0] != "k")
                throw std::invalid_argument("boundary file: unexpected header '" + line + "'");
            if (jump) g.v.assign(n, 0.0);
            continue;
        }
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size()) throw std::invalid_argument("boundary file: ragged row '" + line + "'");
        const std::size_t k = std::stoul(cells[0]);
        if (k != rows || k >= n) throw std::invalid_argument("boundary file: rows out of order or beyond n");
        g.b[k] = detail::parse_real(cells[2]);
        if (jump) {
            g.v[k] = detail::parse_real(cells[3]);
            g.residual[k] = detail::parse_real(cells[4]);
            g.certified[k] = cells[5] == "1";
        }
        ++rows;
    }
    if (rows != n) throw std::invalid_argument("boundary file has " + std::to_string(rows) + " rows, config expects " +
                                               std::to_string(n));
    const auto find = [&](const std::string& key) -> std::string {
        for (const auto& [k, v] : meta)
            if (k == key) return v;
        return {};
    };
    if (find("model") != ctx.model().describe() || find("theta") != detail::fmt12(ctx.theta()))
        throw std::invalid_argument("boundary file was produced for a different model or theta (" + find("model") +
                                    ", theta=" + find("theta") + ")");
    if (jump != ctx.model().has_jumps()) throw std::invalid_argument("boundary file columns do not match the model");
    g.provenance.assign(meta.begin(), meta.end());
    return g;
}

inline BoundaryGrid read_boundary_file(const std::filesystem::path& path, const GainContext& ctx, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open boundary file " + path.string());
    return read_boundary(in, ctx, n);
}

/// Long format t,x,value.
inline std::string value_csv(const ValueGrid& vg, const Provenance& header) {
    std::ostringstream os;
    write_provenance(os, header);
    os << "t,x,value\n";
    for (std::size_t r = 0; r < vg.ts.size(); ++r)
        for (std::size_t j = 0; j < vg.xs.size(); ++j)
            os << num(vg.ts[r]) << "," << num(vg.xs[j]) << "," << num(vg.at_index(r, j)) << "\n";
    return os.str();
}

/// gnuplot blocks: one block per time, blank line between blocks.
inline std::string value_gnuplot(const ValueGrid& vg, const Provenance& header) {
    std::ostringstream os;
    write_provenance(os, header);
    for (std::size_t r = 0; r < vg.ts.size(); ++r) {
        if (r > 0) os << "\n";
        os << "# t=" << num(vg.ts[r]) << "\n";
        for (std::size_t j = 0; j < vg.xs.size(); ++j) os << num(vg.xs[j]) << " " << num(vg.at_index(r, j)) << "\n";
    }
    return os.str();
}

struct ReportRow {
    std::string quantity;
    double value = 0.0;
    double std_error = 0.0;
    std::string note;
};

inline std::string report_csv(const std::vector<ReportRow>& rows, const Provenance& header) {
    std::ostringstream os;
    write_provenance(os, header);
    os << "quantity,value,std_error,note\n";
    for (const ReportRow& r : rows)
        os << r.quantity << "," << num(r.value) << "," << num(r.std_error) << "," << r.note << "\n";
    return os.str();
}

}  // namespace lastpassage
